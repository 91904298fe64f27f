#pragma once

// Multivariate denoising score matching: the pattern-stacked least-squares
// program, and the gated-wedge feature program with a group-lasso penalty and
// an explicit out-of-sample predictor.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "scorekit/common.hpp"
#include "scorekit/core.hpp"
#include "scorekit/prox.hpp"
#include "scorekit/smnd.hpp"

namespace scorekit::dsmnd {

// Minimum-norm least squares over the stacked pattern features:
// min 1/2 || sum_i D_i X W_i - L ||_F^2.
inline smnd::MultiSMSolution solve_dsm_multivariate(const DatasetND& data, const MatrixXd& L,
                                                    const std::vector<smnd::ActivationPattern>& patterns) {
  if (L.rows() != data.n() || L.cols() != data.d())
    throw Error(errc::dimension_mismatch, "label matrix must be n x d");
  if (patterns.empty()) throw Error(errc::empty_data, "no patterns supplied");

  const Eigen::Index d = data.d();
  const Eigen::Index P = static_cast<Eigen::Index>(patterns.size());
  MatrixXd Xt = smnd::stack_patterns(patterns, data.X);
  MatrixXd W = prox::least_squares_min_norm(Xt, L);

  smnd::MultiSMSolution sol;
  sol.patterns = patterns;
  sol.W_blocks.reserve(static_cast<std::size_t>(P));
  for (Eigen::Index i = 0; i < P; ++i) sol.W_blocks.push_back(W.middleRows(i * d, d));
  sol.objective = 0.5 * (Xt * W - L).squaredNorm();
  return sol;
}

// Gated wedge features: column J = (j_1 < ... < j_{d-1}) carries
//   K_{iJ} = ( x_i ^ x_{j_1} ^ ... ^ x_{j_{d-1}} )_+ / || x_{j_1} ^ ... ||_p,
// evaluated through the cofactor vector of the stacked generator rows.
// Zero-norm generators can never activate and are dropped.
struct WedgeFeatureMap {
  MatrixXd K;                                       // n x c
  MatrixXd directions;                              // d x c, columns m_J / ||m_J||_p
  std::vector<std::vector<Eigen::Index>> column_index;
  std::vector<std::vector<Eigen::Index>> dropped;   // degenerate multi-indices
  int p_norm = 2;
};

namespace detail {

// Generalized cross product of (d-1) stacked rows: the vector m with
// det[x; R] = x . m for every x.
inline VectorXd cross_vector(const MatrixXd& R) {
  const Eigen::Index d = R.cols();
  VectorXd m(d);
  MatrixXd minor(d - 1, d - 1);
  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::Index cc = 0;
    for (Eigen::Index c = 0; c < d; ++c) {
      if (c == k) continue;
      minor.col(cc++) = R.col(c);
    }
    const double det = minor.determinant();
    m[k] = ((k % 2) == 0 ? 1.0 : -1.0) * det;
  }
  return m;
}

inline void combinations(Eigen::Index n, Eigen::Index k,
                         const std::function<void(const std::vector<Eigen::Index>&)>& visit) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    visit(idx);
    Eigen::Index pos = k - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (Eigen::Index i = pos + 1; i < k; ++i)
      idx[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i - 1)] + 1;
  }
}

}  // namespace detail

inline WedgeFeatureMap build_wedge_features(const DatasetND& data, int p_norm = 2) {
  const Eigen::Index n = data.n(), d = data.d();
  if (d < 2) throw Error(errc::dimension_too_small, "wedge features need d >= 2");
  if (p_norm != 1 && p_norm != 2) throw Error(errc::bad_beta, "p_norm must be 1 or 2");

  WedgeFeatureMap f;
  f.p_norm = p_norm;

  std::vector<VectorXd> dirs;
  detail::combinations(n, d - 1, [&](const std::vector<Eigen::Index>& J) {
    MatrixXd R(d - 1, d);
    double scale = 1.0;
    for (std::size_t r = 0; r < J.size(); ++r) {
      R.row(static_cast<Eigen::Index>(r)) = data.X.row(J[r]);
      scale *= std::max(data.X.row(J[r]).norm(), 1e-300);
    }
    VectorXd m = detail::cross_vector(R);
    const double norm = p_norm == 2 ? m.norm() : m.lpNorm<1>();
    if (norm <= 1e-12 * scale) {
      f.dropped.push_back(J);
      return;
    }
    dirs.push_back(m / norm);
    f.column_index.push_back(J);
  });

  const Eigen::Index c = static_cast<Eigen::Index>(dirs.size());
  f.directions.resize(d, c);
  for (Eigen::Index j = 0; j < c; ++j) f.directions.col(j) = dirs[static_cast<std::size_t>(j)];
  f.K = (data.X * f.directions).cwiseMax(0.0);
  return f;
}

inline double default_wedge_lambda(const WedgeFeatureMap& f, const MatrixXd& L) {
  const MatrixXd G = f.K.transpose() * L;  // c x d
  double m = 0.0;
  for (Eigen::Index j = 0; j < G.rows(); ++j) m = std::max(m, G.row(j).norm());
  return 0.01 * m;
}

// Group lasso over the rows of Z: min ||K Z - L||_F^2 + lambda sum_j ||Z_j||_2.
inline prox::GroupLassoSolution fit_wedge_dsm(const WedgeFeatureMap& f, const MatrixXd& L,
                                              double lambda, double tol = prox::default_tol,
                                              Eigen::Index max_iters = prox::default_max_iters) {
  if (L.rows() != f.K.rows())
    throw Error(errc::dimension_mismatch, "labels rows vs feature rows");
  return prox::solve_group_lasso(f.K, L, lambda, tol, max_iters);
}

// f(x) = sum_J Z_J (x ^ x_{j_1} ^ ...)_+ / ||...||_p; on the training rows this
// is exactly K Z.
inline MatrixXd predict_wedge_score(const MatrixXd& Z, const WedgeFeatureMap& f,
                                    const MatrixXd& x_test) {
  if (Z.rows() != f.K.cols())
    throw Error(errc::dimension_mismatch, "Z rows " + std::to_string(Z.rows()) +
                                              " vs feature columns " + std::to_string(f.K.cols()));
  if (x_test.cols() != f.directions.rows())
    throw Error(errc::dimension_mismatch, "test dim vs feature dim");
  return (x_test * f.directions).cwiseMax(0.0) * Z;
}

}  // namespace scorekit::dsmnd
