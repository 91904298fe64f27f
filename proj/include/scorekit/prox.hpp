#pragma once

// Deterministic first-order solvers for the convex problem shapes produced by
// the score-matching reductions:
//   solve_l1_quadratic : min 1/2 ||A y||^2 + b^T y + beta ||y||_1
//   solve_lasso        : min 1/2 ||A y + t||^2 + beta ||y||_1
//   solve_group_lasso  : min ||K Z - L||_F^2 + lambda sum_j ||Z_j||_2  (rows Z_j)
//   least_squares_min_norm : pseudoinverse solution of min ||A X - B||_F
//
// All solves are accelerated proximal gradient (monotone FISTA) from the zero
// initial point with a fixed step 1/L, L estimated by power iteration. Fixed
// iteration order, no randomized components: identical inputs give identical
// outputs.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <cstdint>
#include <vector>

#include "scorekit/common.hpp"
#include "scorekit/rng.hpp"

namespace scorekit::prox {

struct L1QuadraticProblem {
  MatrixXd A;      // n x k
  VectorXd b_lin;  // k
  double beta = 0.0;
};

enum class SolveStatus { Converged, MaxIters, Unbounded };

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIters: return "MaxIters";
    case SolveStatus::Unbounded: return "Unbounded";
  }
  return "Unknown";
}

struct LassoSolution {
  VectorXd y_star;
  double objective = 0.0;
  double kkt_residual = 0.0;
  Eigen::Index iterations = 0;
  SolveStatus status = SolveStatus::MaxIters;
  std::vector<double> objective_trace;  // accepted objective per iteration, nonincreasing
};

inline constexpr double default_tol = 1e-8;
inline constexpr Eigen::Index default_max_iters = 200000;

// Largest eigenvalue of A^T A by power iteration (50 sweeps, tolerance 1e-10)
// from a fixed pseudo-random start; falls back to the Frobenius bound if the
// start lands in a null direction.
inline double lipschitz_quadratic(const MatrixXd& A) {
  const Eigen::Index k = A.cols();
  if (k == 0 || A.rows() == 0) return 0.0;
  const double frob2 = A.squaredNorm();
  if (frob2 <= 0.0) return 0.0;

  VectorXd v(k);
  for (Eigen::Index j = 0; j < k; ++j)
    v[j] = rng::normal(0xC0FFEE, 0, 0, static_cast<std::uint64_t>(j));
  v.normalize();

  double lam = 0.0;
  for (int it = 0; it < 50; ++it) {
    VectorXd w = A.transpose() * (A * v);
    const double nw = w.norm();
    if (nw <= 1e-300) return frob2;
    w /= nw;
    const double lam_new = (A * w).squaredNorm();
    if (std::abs(lam_new - lam) <= 1e-10 * std::max(1.0, lam_new)) {
      lam = lam_new;
      break;
    }
    lam = lam_new;
    v = w;
  }
  return lam > 0.0 ? lam : frob2;
}

inline double soft_threshold(double x, double thr) {
  if (x > thr) return x - thr;
  if (x < -thr) return x + thr;
  return 0.0;
}

// Subgradient optimality residual of 1/2||Ay||^2 + b^T y + beta||y||_1:
// max over j of (|g_j| - beta)_+ where y_j = 0 and |g_j + beta sign(y_j)| otherwise,
// with g = A^T A y + b.
inline double l1_kkt_residual(const VectorXd& grad, const VectorXd& y, double beta) {
  double r = 0.0;
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    double c;
    if (y[j] == 0.0)
      c = std::max(std::abs(grad[j]) - beta, 0.0);
    else
      c = std::abs(grad[j] + beta * sign_pos(y[j]));
    r = std::max(r, c);
  }
  return r;
}

namespace detail {

// Monotone FISTA on f(y) + beta ||y||_1 where f(y) = 1/2 ||A y + shift||^2 + b^T y.
// Either shift or b may be empty (treated as zero).
inline LassoSolution l1_accelerated(const MatrixXd& A, const VectorXd& shift, const VectorXd& b,
                                    double beta, double tol, Eigen::Index max_iters,
                                    double extra_objective = 0.0) {
  const Eigen::Index k = A.cols();
  const bool has_shift = shift.size() > 0;
  const bool has_b = b.size() > 0;

  const double lam = lipschitz_quadratic(A);
  const double step = 1.0 / std::max(lam * 1.01, 1e-12);

  auto smooth_grad = [&](const VectorXd& y) -> VectorXd {
    VectorXd r = A * y;
    if (has_shift) r += shift;
    VectorXd g = A.transpose() * r;
    if (has_b) g += b;
    return g;
  };
  auto objective = [&](const VectorXd& y) -> double {
    VectorXd r = A * y;
    if (has_shift) r += shift;
    double f = 0.5 * r.squaredNorm();
    if (has_b) f += b.dot(y);
    return f + beta * y.template lpNorm<1>() + extra_objective;
  };

  LassoSolution sol;
  VectorXd x = VectorXd::Zero(k);      // accepted iterate
  VectorXd x_prev = x;
  VectorXd z = x;                      // extrapolated point
  double fx = objective(x);
  double t = 1.0;

  const double unbounded_floor = -1.0 / tol;
  sol.objective_trace.reserve(64);

  Eigen::Index it = 0;
  for (; it < max_iters; ++it) {
    VectorXd g = smooth_grad(z);
    VectorXd u = z - step * g;
    for (Eigen::Index j = 0; j < k; ++j) u[j] = soft_threshold(u[j], step * beta);
    const double fu = objective(u);

    x_prev.swap(x);
    double f_acc;
    if (fu <= fx) {  // monotone acceptance
      x = u;
      f_acc = fu;
    } else {
      x = x_prev;
      f_acc = fx;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = x + (t / t_next) * (u - x) + ((t - 1.0) / t_next) * (x - x_prev);
    t = t_next;
    fx = f_acc;
    sol.objective_trace.push_back(fx);

    if (fu < unbounded_floor || !std::isfinite(fu)) {
      sol.y_star = u;
      sol.objective = fu;
      sol.kkt_residual = std::numeric_limits<double>::infinity();
      sol.iterations = it + 1;
      sol.status = SolveStatus::Unbounded;
      return sol;
    }

    const double kkt = l1_kkt_residual(smooth_grad(x), x, beta);
    if (kkt <= tol) {
      sol.y_star = x;
      sol.objective = fx;
      sol.kkt_residual = kkt;
      sol.iterations = it + 1;
      sol.status = SolveStatus::Converged;
      return sol;
    }
  }
  sol.y_star = x;
  sol.objective = fx;
  sol.kkt_residual = l1_kkt_residual(smooth_grad(x), x, beta);
  sol.iterations = it;
  sol.status = SolveStatus::MaxIters;
  return sol;
}

}  // namespace detail

inline LassoSolution solve_l1_quadratic(const L1QuadraticProblem& prob, double tol = default_tol,
                                        Eigen::Index max_iters = default_max_iters) {
  if (tol <= 0.0) throw Error(errc::bad_beta, "tol must be positive");
  if (prob.b_lin.size() != prob.A.cols())
    throw Error(errc::dimension_mismatch,
                "b_lin length " + std::to_string(prob.b_lin.size()) + " vs A cols " +
                    std::to_string(prob.A.cols()));
  if (prob.beta < 0.0) throw Error(errc::bad_beta, "beta must be nonnegative");
  return detail::l1_accelerated(prob.A, VectorXd(), prob.b_lin, prob.beta, tol, max_iters);
}

inline LassoSolution solve_lasso(const MatrixXd& A, const VectorXd& target, double beta,
                                 double tol = default_tol, Eigen::Index max_iters = default_max_iters) {
  if (target.size() != A.rows())
    throw Error(errc::dimension_mismatch, "target length " + std::to_string(target.size()) +
                                              " vs A rows " + std::to_string(A.rows()));
  if (beta < 0.0) throw Error(errc::bad_beta, "beta must be nonnegative");
  if (tol <= 0.0) throw Error(errc::bad_beta, "tol must be positive");
  return detail::l1_accelerated(A, target, VectorXd(), beta, tol, max_iters);
}

struct GroupLassoSolution {
  MatrixXd Z;
  double objective = 0.0;
  double kkt_residual = 0.0;
  Eigen::Index iterations = 0;
  SolveStatus status = SolveStatus::MaxIters;
};

// Block KKT residual of ||KZ - L||_F^2 + lambda sum_j ||Z_j||_2 over rows Z_j,
// with G = 2 K^T (K Z - L).
inline double group_kkt_residual(const MatrixXd& G, const MatrixXd& Z, double lambda) {
  double r = 0.0;
  for (Eigen::Index j = 0; j < Z.rows(); ++j) {
    const double zn = Z.row(j).norm();
    double c;
    if (zn == 0.0)
      c = std::max(G.row(j).norm() - lambda, 0.0);
    else
      c = (G.row(j) + lambda * Z.row(j) / zn).norm();
    r = std::max(r, c);
  }
  return r;
}

inline GroupLassoSolution solve_group_lasso(const MatrixXd& K, const MatrixXd& L, double lambda,
                                            double tol = default_tol,
                                            Eigen::Index max_iters = default_max_iters) {
  if (L.rows() != K.rows())
    throw Error(errc::dimension_mismatch, "L rows " + std::to_string(L.rows()) + " vs K rows " +
                                              std::to_string(K.rows()));
  if (lambda < 0.0) throw Error(errc::bad_beta, "lambda must be nonnegative");
  if (tol <= 0.0) throw Error(errc::bad_beta, "tol must be positive");

  const Eigen::Index c = K.cols();
  const Eigen::Index d = L.cols();
  const double lam_max = lipschitz_quadratic(K);
  const double step = 1.0 / std::max(2.0 * lam_max * 1.01, 1e-12);

  auto objective = [&](const MatrixXd& Z) {
    double f = (K * Z - L).squaredNorm();
    for (Eigen::Index j = 0; j < c; ++j) f += lambda * Z.row(j).norm();
    return f;
  };
  auto grad = [&](const MatrixXd& Z) -> MatrixXd { return 2.0 * K.transpose() * (K * Z - L); };

  GroupLassoSolution sol;
  MatrixXd X = MatrixXd::Zero(c, d), X_prev = X, Zc = X;
  double fx = objective(X);
  double t = 1.0;
  const double unbounded_floor = -1.0 / tol;

  Eigen::Index it = 0;
  for (; it < max_iters; ++it) {
    MatrixXd U = Zc - step * grad(Zc);
    for (Eigen::Index j = 0; j < c; ++j) {
      const double un = U.row(j).norm();
      const double scale = un > step * lambda ? 1.0 - step * lambda / un : 0.0;
      U.row(j) *= scale;
    }
    const double fu = objective(U);

    X_prev.swap(X);
    if (fu <= fx) {
      X = U;
      fx = fu;
    } else {
      X = X_prev;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    Zc = X + (t / t_next) * (U - X) + ((t - 1.0) / t_next) * (X - X_prev);
    t = t_next;

    if (fu < unbounded_floor || !std::isfinite(fu)) {
      sol.Z = U;
      sol.objective = fu;
      sol.kkt_residual = std::numeric_limits<double>::infinity();
      sol.iterations = it + 1;
      sol.status = SolveStatus::Unbounded;
      return sol;
    }
    const double kkt = group_kkt_residual(grad(X), X, lambda);
    if (kkt <= tol) {
      sol.Z = X;
      sol.objective = fx;
      sol.kkt_residual = kkt;
      sol.iterations = it + 1;
      sol.status = SolveStatus::Converged;
      return sol;
    }
  }
  sol.Z = X;
  sol.objective = fx;
  sol.kkt_residual = group_kkt_residual(grad(X), X, lambda);
  sol.iterations = it;
  sol.status = SolveStatus::MaxIters;
  return sol;
}

// Minimum-Frobenius-norm solution of min ||A X - B||_F via SVD pseudoinverse
// with relative cutoff 1e-10 * sigma_1.
inline MatrixXd least_squares_min_norm(const MatrixXd& A, const MatrixXd& B,
                                       double rel_cutoff = 1e-10) {
  if (B.rows() != A.rows())
    throw Error(errc::dimension_mismatch, "B rows " + std::to_string(B.rows()) + " vs A rows " +
                                              std::to_string(A.rows()));
  if (A.size() == 0) return MatrixXd::Zero(A.cols(), B.cols());
  Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? rel_cutoff * s[0] : 0.0;
  MatrixXd UtB = svd.matrixU().transpose() * B;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > cutoff && s[i] > 0.0)
      UtB.row(i) /= s[i];
    else
      UtB.row(i).setZero();
  }
  return svd.matrixV() * UtB;
}

}  // namespace scorekit::prox
