#pragma once

// Univariate score matching as a convex program. Builds the L1-regularized
// quadratic for all four architecture variants, computes the weight-decay
// thresholds that delimit the closed-form regimes, reconstructs an optimal
// two-layer network from the convex solution, and evaluates the closed-form
// piecewise-linear score prediction.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "scorekit/common.hpp"
#include "scorekit/core.hpp"
#include "scorekit/prox.hpp"

namespace scorekit::sm1d {

enum class Variant { ReLUNoSkip, AbsNoSkip, ReLUSkip, AbsSkip };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::ReLUNoSkip: return "relu_noskip";
    case Variant::AbsNoSkip: return "abs_noskip";
    case Variant::ReLUSkip: return "relu_skip";
    case Variant::AbsSkip: return "abs_skip";
  }
  return "unknown";
}

inline Variant variant_of(const ArchitectureConfig& cfg) {
  if (cfg.activation == Activation::ReLU) return cfg.skip ? Variant::ReLUSkip : Variant::ReLUNoSkip;
  return cfg.skip ? Variant::AbsSkip : Variant::AbsNoSkip;
}

// Bias shift used for the two indicator flavors in the ReLU reconstruction.
inline constexpr double relu_bias_shift = 1e-8;

struct SMProgram1D {
  MatrixXd A;       // n x k quadratic coefficient (columns mean-free / projected)
  VectorXd b_lin;   // k linear coefficient
  double c_const = 0.0;  // additive constant of the reduced objective (skip variants)
  Variant variant = Variant::ReLUNoSkip;
  double beta = 1.0;

  // raw pairwise matrices kept for reconstruction
  MatrixXd H1;  // (x_i - x_j)_+ for ReLU variants, |x_i - x_j| for abs/skip variants
  MatrixXd H2;  // (x_j - x_i)_+ for ReLUNoSkip only
  VectorXd x;   // sorted training points
  double mu = 0.0;
  double v = 0.0;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index k() const { return A.cols(); }
  // Effective L1 coefficient of the solver problem (the ReLU+skip reduction
  // carries a doubled penalty).
  double l1_coefficient() const { return variant == Variant::ReLUSkip ? 2.0 * beta : beta; }

  prox::L1QuadraticProblem to_l1_problem() const { return {A, b_lin, l1_coefficient()}; }
};

namespace detail {

inline MatrixXd pairwise_relu_pos(const VectorXd& x) {
  const Eigen::Index n = x.size();
  MatrixXd M(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) M(i, j) = relu(x[i] - x[j]);
  return M;
}

inline MatrixXd pairwise_relu_neg(const VectorXd& x) {
  const Eigen::Index n = x.size();
  MatrixXd M(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) M(i, j) = relu(x[j] - x[i]);
  return M;
}

inline MatrixXd pairwise_abs(const VectorXd& x) {
  const Eigen::Index n = x.size();
  MatrixXd M(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) M(i, j) = std::abs(x[i] - x[j]);
  return M;
}

// Remove column means; a second pass absorbs the leftover rounding so that
// column sums of the result vanish at machine precision.
inline void center_columns(MatrixXd& M) {
  const double n = static_cast<double>(M.rows());
  M.rowwise() -= M.colwise().mean();
  M.rowwise() -= (M.colwise().sum() / n);
}

}  // namespace detail

inline SMProgram1D build_sm_program(const Dataset1D& data, const ArchitectureConfig& cfg) {
  const Eigen::Index n = data.n();
  const VectorXd& x = data.points;
  const Variant variant = variant_of(cfg);

  const double beta_min = variant == Variant::AbsSkip ? 2.0 : 1.0;
  if (cfg.beta < beta_min) {
    throw Error(errc::beta_too_small,
                std::string(variant_name(variant)) + " requires beta >= " + std::to_string(beta_min) +
                    " for a finite optimum (the training objective is unbounded below otherwise); got " +
                    std::to_string(cfg.beta));
  }

  SMProgram1D prog;
  prog.variant = variant;
  prog.beta = cfg.beta;
  prog.x = x;
  prog.mu = data.mu;
  prog.v = data.v;

  if (variant == Variant::ReLUNoSkip) {
    prog.H1 = detail::pairwise_relu_pos(x);
    prog.H2 = detail::pairwise_relu_neg(x);
    MatrixXd A1 = prog.H1, A2 = prog.H2;
    detail::center_columns(A1);
    detail::center_columns(A2);
    prog.A.resize(n, 4 * n);
    prog.A << A1, A1, A2, A2;
    prog.b_lin.resize(4 * n);
    for (Eigen::Index j = 0; j < n; ++j) {
      double c1 = 0, c2 = 0, c3 = 0, c4 = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        c1 += (x[i] - x[j] >= 0.0) ? 1.0 : 0.0;
        c2 += (x[i] - x[j] > 0.0) ? 1.0 : 0.0;
        c3 += (x[j] - x[i] >= 0.0) ? 1.0 : 0.0;
        c4 += (x[j] - x[i] > 0.0) ? 1.0 : 0.0;
      }
      prog.b_lin[j] = c1;
      prog.b_lin[n + j] = c2;
      prog.b_lin[2 * n + j] = -c3;
      prog.b_lin[3 * n + j] = -c4;
    }
    return prog;
  }

  // The remaining three variants share the absolute-value pairwise block.
  prog.H1 = detail::pairwise_abs(x);
  MatrixXd A1 = prog.H1;
  detail::center_columns(A1);
  VectorXd b_abs(2 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double s1 = 0, s2 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      s1 += sign_pos(x[i] - x[j]);
      s2 += sign_pos(x[j] - x[i]);
    }
    b_abs[j] = s1;
    b_abs[n + j] = -s2;
  }

  if (variant == Variant::AbsNoSkip) {
    prog.A.resize(n, 2 * n);
    prog.A << A1, A1;
    prog.b_lin = b_abs;
    return prog;
  }

  // Skip variants: project the quadratic term off the centered-data direction
  // and shift the linear term accordingly; the eliminated skip coefficient
  // leaves the constant -n^2 / (2 ||x - mu||^2) behind.
  const VectorXd xc = x.array() - data.mu;
  const double xc2 = xc.squaredNorm();  // = n v > 0
  MatrixXd stacked(n, 2 * n);
  stacked << A1, A1;
  MatrixXd proj = stacked - (xc / xc2) * (xc.transpose() * stacked);
  prog.A = proj;
  prog.b_lin = b_abs - stacked.transpose() * (xc * (static_cast<double>(n) / xc2));
  prog.c_const = -static_cast<double>(n) * static_cast<double>(n) / (2.0 * xc2);
  return prog;
}

struct BetaThresholds {
  double b_inf = 0.0;    // ||b||_inf of the program
  double beta_low = 0.0; // smallest weight decay for which the two-spike form stays optimal
};

// Indices of the two columns that carry the two-spike solution: the first
// column of the first block and the last column of the last sign-flipped block.
inline std::pair<Eigen::Index, Eigen::Index> spike_columns(const SMProgram1D& prog) {
  const Eigen::Index n = prog.n();
  if (prog.variant == Variant::ReLUNoSkip) return {0, 3 * n - 1};
  return {0, 2 * n - 1};
}

inline BetaThresholds compute_beta_thresholds(const Dataset1D& data, const ArchitectureConfig& cfg) {
  const Variant variant = variant_of(cfg);
  if (variant == Variant::ReLUSkip || variant == Variant::AbsSkip)
    throw Error(errc::not_applicable,
                "thresholds of the two-spike family apply to the no-skip variants only; the "
                "skip variants switch regimes at ||b||_inf of their own program");

  // Build with a feasible beta; the threshold analysis itself is beta-free.
  ArchitectureConfig probe = cfg;
  probe.beta = std::max(cfg.beta, 2.0);
  const SMProgram1D prog = build_sm_program(data, probe);

  const double n = static_cast<double>(prog.n());
  const double nv = n * data.v;
  const auto [i0, i1] = spike_columns(prog);

  BetaThresholds th;
  th.b_inf = prog.b_lin.cwiseAbs().maxCoeff();

  // Stationarity of the candidate solution at the inactive column j reads
  // |b_j + q_j (beta - n)| <= beta with q_j = a_j^T a_{i0} / (n v); each side
  // is linear in beta, so intersect the per-column feasibility intervals.
  const VectorXd g = prog.A.transpose() * prog.A.col(i0);
  double lo = 0.0;
  for (Eigen::Index j = 0; j < prog.k(); ++j) {
    if (j == i0 || j == i1) continue;
    const double q = g[j] / nv;
    const double coef1 = 1.0 - q, rhs1 = prog.b_lin[j] - q * n;
    const double coef2 = 1.0 + q, rhs2 = -prog.b_lin[j] + q * n;
    for (auto [coef, rhs] : {std::pair{coef1, rhs1}, std::pair{coef2, rhs2}}) {
      if (coef > 1e-12)
        lo = std::max(lo, rhs / coef);
      else if (coef >= -1e-12 && rhs > 1e-9)
        lo = th.b_inf;  // constraint violated for every beta; family regime is empty
    }
  }
  th.beta_low = lo;
  return th;
}

// Piecewise-linear function stored per segment as value = intercept + slope * x.
// Segment i covers (breakpoints[i-1], breakpoints[i]].
struct PiecewiseLinearScore {
  std::vector<double> breakpoints;  // ascending, subset of training points
  std::vector<double> slopes;       // breakpoints.size() + 1
  std::vector<double> intercepts;   // breakpoints.size() + 1
  double t_param = 0.0;

  double operator()(double x) const {
    std::size_t seg = std::upper_bound(breakpoints.begin(), breakpoints.end(), x) - breakpoints.begin();
    return intercepts[seg] + slopes[seg] * x;
  }
  VectorXd operator()(const VectorXd& xs) const {
    VectorXd out(xs.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i) out[i] = (*this)(xs[i]);
    return out;
  }
};

inline PiecewiseLinearScore closed_form_score(const Dataset1D& data, const ArchitectureConfig& cfg,
                                              double t = 0.0) {
  const Variant variant = variant_of(cfg);
  const double n = static_cast<double>(data.n());
  const double nv = n * data.v;

  if (variant == Variant::ReLUSkip || variant == Variant::AbsSkip) {
    const double beta_min = variant == Variant::AbsSkip ? 2.0 : 1.0;
    if (cfg.beta < beta_min)
      throw Error(errc::beta_out_of_regime, "no finite optimum below the feasibility threshold");
    const SMProgram1D prog = build_sm_program(data, cfg);
    const double b_inf = prog.b_lin.cwiseAbs().maxCoeff();
    if (prog.l1_coefficient() < b_inf)
      throw Error(errc::beta_out_of_regime,
                  "closed form for skip variants covers only the zero-solution regime "
                  "(penalty >= ||b||_inf)");
    if (t != 0.0) throw Error(errc::t_out_of_range, "skip closed form has no exterior family");
    PiecewiseLinearScore s;
    s.slopes = {-1.0 / data.v};
    s.intercepts = {data.mu / data.v};
    return s;
  }

  if (cfg.beta < 1.0)
    throw Error(errc::beta_out_of_regime, "no finite optimum below unit weight decay");

  const BetaThresholds th = compute_beta_thresholds(data, cfg);

  if (cfg.beta > th.b_inf) {
    if (t != 0.0) throw Error(errc::t_out_of_range, "zero-score regime has no exterior family");
    PiecewiseLinearScore s;
    s.slopes = {0.0};
    s.intercepts = {0.0};
    return s;
  }
  if (cfg.beta <= th.beta_low)
    throw Error(errc::beta_out_of_regime,
                "two-spike closed form requires beta in (" + std::to_string(th.beta_low) + ", " +
                    std::to_string(th.b_inf) + "]");

  const double t_max = (n - cfg.beta) / (2.0 * nv);
  if (std::abs(t) > t_max * (1.0 + 1e-12) + 1e-15)
    throw Error(errc::t_out_of_range,
                "|t| exceeds the family bound " + std::to_string(t_max));

  const double si = (cfg.beta - n) / nv;  // interior slope
  double sl, sr;                          // exterior slopes
  if (variant == Variant::ReLUNoSkip) {
    sl = 0.5 * si - t;
    sr = 0.5 * si + t;
  } else {
    sl = -2.0 * t;
    sr = 2.0 * t;
  }

  const double x1 = data.points[0], xn = data.points[data.n() - 1];
  PiecewiseLinearScore s;
  s.t_param = t;
  s.breakpoints = {x1, xn};
  const double v1 = si * (x1 - data.mu);
  const double vn = si * (xn - data.mu);
  s.slopes = {sl, si, sr};
  s.intercepts = {v1 - sl * x1, -si * data.mu, vn - sr * xn};
  return s;
}

// Optimal network parameters from a convex solution. The ReLU no-skip variant
// realizes the strict-indicator columns with biases shifted by relu_bias_shift,
// so its training objective matches the convex optimum up to O(shift).
inline TwoLayerParams reconstruct_network(const VectorXd& y_star, const Dataset1D& data,
                                          const ArchitectureConfig& cfg) {
  const Eigen::Index n = data.n();
  const VectorXd& x = data.points;
  const Variant variant = variant_of(cfg);
  const Eigen::Index k_expected = variant == Variant::ReLUNoSkip ? 4 * n : 2 * n;
  if (y_star.size() != k_expected)
    throw Error(errc::dimension_mismatch, "solution length " + std::to_string(y_star.size()) +
                                              " vs expected " + std::to_string(k_expected));

  TwoLayerParams p = zero_network(cfg.activation, k_expected, 1);

  auto set_neuron = [&](Eigen::Index j, double w, double alpha, double anchor) {
    p.W1(j, 0) = w;
    p.W2(j, 0) = alpha;
    p.b1[j] = -w * anchor;
  };

  if (variant == Variant::ReLUNoSkip) {
    const double eps = relu_bias_shift;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double r0 = std::sqrt(std::abs(y_star[j]));
      set_neuron(j, r0, sign_pos(y_star[j]) * r0, x[j]);
      const double r1 = std::sqrt(std::abs(y_star[n + j]));
      set_neuron(n + j, r1, sign_pos(y_star[n + j]) * r1, x[j] + eps);
      const double r2 = std::sqrt(std::abs(y_star[2 * n + j]));
      set_neuron(2 * n + j, -r2, sign_pos(y_star[2 * n + j]) * r2, x[j]);
      const double r3 = std::sqrt(std::abs(y_star[3 * n + j]));
      set_neuron(3 * n + j, -r3, sign_pos(y_star[3 * n + j]) * r3, x[j] - eps);
    }
    const MatrixXd H1 = detail::pairwise_relu_pos(x);
    const MatrixXd H2 = detail::pairwise_relu_neg(x);
    const VectorXd fitted = H1 * (y_star.segment(0, n) + y_star.segment(n, n)) +
                            H2 * (y_star.segment(2 * n, n) + y_star.segment(3 * n, n));
    p.b2[0] = -fitted.sum() / static_cast<double>(n);
    return p;
  }

  const double scale = variant == Variant::ReLUSkip ? std::sqrt(2.0) : 1.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double r0 = scale * std::sqrt(std::abs(y_star[j]));
    set_neuron(j, r0, sign_pos(y_star[j]) * r0, x[j]);
    const double r1 = scale * std::sqrt(std::abs(y_star[n + j]));
    set_neuron(n + j, -r1, sign_pos(y_star[n + j]) * r1, x[j]);
  }

  const MatrixXd H = detail::pairwise_abs(x);
  const VectorXd ysum = y_star.segment(0, n) + y_star.segment(n, n);
  const VectorXd fitted = H * ysum;

  if (variant == Variant::AbsNoSkip) {
    p.b2[0] = -fitted.sum() / static_cast<double>(n);
    return p;
  }

  const VectorXd xc = x.array() - data.mu;
  const double xc2 = xc.squaredNorm();
  const double v_abs = -(xc.dot(fitted) + static_cast<double>(n)) / xc2;

  if (variant == Variant::AbsSkip) {
    p.V(0, 0) = v_abs;
    p.b2[0] = -(fitted.sum() + v_abs * x.sum()) / static_cast<double>(n);
    return p;
  }

  // ReLU + skip: the absolute-value realization above is folded back into
  // ReLU neurons; skip and output bias absorb the halved linear parts.
  double wa_sum = 0.0, ba_sum = 0.0;
  for (Eigen::Index j = 0; j < p.width(); ++j) {
    wa_sum += p.W1(j, 0) * p.W2(j, 0);
    ba_sum += p.b1[j] * p.W2(j, 0);
  }
  p.V(0, 0) = v_abs - 0.5 * wa_sum;
  p.b2[0] = -(fitted.sum() + v_abs * x.sum()) / static_cast<double>(n) - 0.5 * ba_sum;
  return p;
}

}  // namespace scorekit::sm1d
