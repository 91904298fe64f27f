#pragma once

// Univariate denoising score matching as a lasso. Labels are taken as given
// (the caller owns the noise convention), so everything here is deterministic.

#include <Eigen/Dense>

#include <cmath>

#include "scorekit/common.hpp"
#include "scorekit/core.hpp"
#include "scorekit/prox.hpp"
#include "scorekit/sm1d.hpp"

namespace scorekit::dsm1d {

enum class Variant { ReLU, Abs };

struct DSMProgram1D {
  MatrixXd A;          // n x k, column-mean-subtracted hinge/abs features
  VectorXd target;     // n, mean-subtracted labels
  VectorXd raw_labels; // n
  double epsilon = 0.0;
  Variant variant = Variant::ReLU;
  double beta = 0.0;

  MatrixXd H1, H2;  // raw feature blocks for reconstruction (H2 empty for abs)
  VectorXd x;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index k() const { return A.cols(); }
};

inline DSMProgram1D build_dsm_program(const Dataset1D& noisy_points, const VectorXd& labels,
                                      double epsilon, Activation activation, double beta) {
  const Eigen::Index n = noisy_points.n();
  if (labels.size() != n)
    throw Error(errc::dimension_mismatch, "labels length " + std::to_string(labels.size()) +
                                              " vs n = " + std::to_string(n));
  if (epsilon <= 0.0) throw Error(errc::bad_epsilon, "noise scale must be positive");
  if (beta <= 0.0)
    throw Error(errc::bad_beta,
                "weight decay must be positive; the unregularized multivariate least-squares "
                "path handles beta = 0");

  DSMProgram1D prog;
  prog.x = noisy_points.points;
  prog.raw_labels = labels;
  prog.epsilon = epsilon;
  prog.beta = beta;
  prog.target = labels.array() - labels.mean();

  if (activation == Activation::ReLU) {
    prog.variant = Variant::ReLU;
    prog.H1 = sm1d::detail::pairwise_relu_pos(prog.x);
    prog.H2 = sm1d::detail::pairwise_relu_neg(prog.x);
    MatrixXd A1 = prog.H1, A2 = prog.H2;
    sm1d::detail::center_columns(A1);
    sm1d::detail::center_columns(A2);
    prog.A.resize(n, 2 * n);
    prog.A << A1, A2;
  } else {
    prog.variant = Variant::Abs;
    prog.H1 = sm1d::detail::pairwise_abs(prog.x);
    MatrixXd A3 = prog.H1;
    sm1d::detail::center_columns(A3);
    prog.A = A3;
  }
  return prog;
}

inline prox::LassoSolution solve_dsm_program(const DSMProgram1D& prog, double tol = prox::default_tol,
                                             Eigen::Index max_iters = prox::default_max_iters) {
  return prox::solve_lasso(prog.A, prog.target, prog.beta, tol, max_iters);
}

inline double dsm_output_bias(const VectorXd& y_star, const DSMProgram1D& prog) {
  const Eigen::Index n = prog.n();
  VectorXd fitted;
  if (prog.variant == Variant::ReLU)
    fitted = prog.H1 * y_star.segment(0, n) + prog.H2 * y_star.segment(n, n);
  else
    fitted = prog.H1 * y_star;
  return (fitted.sum() + prog.raw_labels.sum()) / static_cast<double>(n);
}

// Optimal network from the lasso solution; the second layer carries the
// negated coefficients, so the predictor reads
//   s(x) = -sum_i y_i (x - x_i)_+ - sum_i y_{n+i} (x_i - x)_+ + b0   (ReLU)
//   s(x) = -sum_i y_i |x - x_i| + b0                                 (abs)
// with b0 = mean(fitted + labels).
inline TwoLayerParams reconstruct_dsm_network(const VectorXd& y_star, const DSMProgram1D& prog) {
  const Eigen::Index n = prog.n();
  if (y_star.size() != prog.k())
    throw Error(errc::dimension_mismatch, "solution length " + std::to_string(y_star.size()) +
                                              " vs program width " + std::to_string(prog.k()));

  const Activation act = prog.variant == Variant::ReLU ? Activation::ReLU : Activation::Abs;
  TwoLayerParams p = zero_network(act, prog.k(), 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double r0 = std::sqrt(std::abs(y_star[j]));
    p.W1(j, 0) = r0;
    p.W2(j, 0) = -sign_pos(y_star[j]) * r0;
    p.b1[j] = -r0 * prog.x[j];
    if (prog.variant == Variant::ReLU) {
      const double r1 = std::sqrt(std::abs(y_star[n + j]));
      p.W1(n + j, 0) = -r1;
      p.W2(n + j, 0) = -sign_pos(y_star[n + j]) * r1;
      p.b1[n + j] = r1 * prog.x[j];
    }
  }
  p.b2[0] = dsm_output_bias(y_star, prog);
  return p;
}

inline VectorXd predict_dsm_score(const VectorXd& y_star, const DSMProgram1D& prog,
                                  const VectorXd& x_test) {
  const Eigen::Index n = prog.n();
  if (y_star.size() != prog.k())
    throw Error(errc::dimension_mismatch, "solution length vs program width");
  const double b0 = dsm_output_bias(y_star, prog);
  VectorXd out(x_test.size());
  for (Eigen::Index t = 0; t < x_test.size(); ++t) {
    double acc = b0;
    if (prog.variant == Variant::ReLU) {
      for (Eigen::Index i = 0; i < n; ++i) {
        acc -= y_star[i] * relu(x_test[t] - prog.x[i]);
        acc -= y_star[n + i] * relu(prog.x[i] - x_test[t]);
      }
    } else {
      for (Eigen::Index i = 0; i < n; ++i) acc -= y_star[i] * std::abs(x_test[t] - prog.x[i]);
    }
    out[t] = acc;
  }
  return out;
}

}  // namespace scorekit::dsm1d
