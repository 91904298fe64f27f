#pragma once

// Multivariate score matching over hyperplane-arrangement activation patterns:
// exhaustive/sampled pattern enumeration, the stacked least-squares program
// with its pseudoinverse closed form, and network reconstruction by splitting
// generators inside each pattern cone.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "scorekit/common.hpp"
#include "scorekit/core.hpp"
#include "scorekit/prox.hpp"
#include "scorekit/rng.hpp"

namespace scorekit::smnd {

// One arrangement pattern: mask bit i is 1 exactly when x_i^T u >= 0 for the
// stored generator (sign(0) = +1). For ReLU the diagonal is the mask itself,
// for absolute value it is the +/-1 sign pattern.
struct ActivationPattern {
  std::vector<std::uint8_t> mask;
  VectorXd generator_u;  // unit norm witness
  Activation activation = Activation::ReLU;

  double diag(std::size_t i) const {
    if (activation == Activation::ReLU) return mask[i] ? 1.0 : 0.0;
    return mask[i] ? 1.0 : -1.0;
  }
  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) t += diag(i);
    return t;
  }
  std::string mask_string() const {
    std::string s(mask.size(), '0');
    for (std::size_t i = 0; i < mask.size(); ++i) s[i] = mask[i] ? '1' : '0';
    return s;
  }
};

struct EnumMethod {
  enum Kind { Exhaustive, Sampled } kind = Exhaustive;
  Eigen::Index count = 0;
  std::uint64_t seed = 0;

  static EnumMethod exhaustive() { return {Exhaustive, 0, 0}; }
  static EnumMethod sampled(Eigen::Index count, std::uint64_t seed) {
    return {Sampled, count, seed};
  }
};

namespace detail {

inline constexpr double mask_snap_rel = 1e-12;

inline std::vector<std::uint8_t> mask_of(const MatrixXd& X, const VectorXd& u) {
  const double un = u.norm();
  std::vector<std::uint8_t> m(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double t = X.row(i).dot(u);
    const double snap = mask_snap_rel * X.row(i).norm() * un;
    m[i] = (t >= -snap) ? 1 : 0;
  }
  return m;
}

using PatternMap = std::map<std::vector<std::uint8_t>, VectorXd>;

inline void add_candidate(PatternMap& out, const MatrixXd& X, VectorXd u) {
  const double n = u.norm();
  if (n <= 0.0 || !std::isfinite(n)) return;
  u /= n;
  auto m = mask_of(X, u);
  out.emplace(std::move(m), std::move(u));  // keeps the first witness
}

// Exhaustive generators for d = 2: walk the circle of directions; candidate
// angles are every hyperplane boundary plus the midpoints between consecutive
// boundaries, which together touch every face of the arrangement.
inline void candidates_2d(PatternMap& out, const MatrixXd& X) {
  std::vector<double> bounds;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (X.row(i).norm() <= 0.0) continue;
    const double phi = std::atan2(X(i, 1), X(i, 0));
    for (double off : {M_PI / 2.0, -M_PI / 2.0}) {
      double a = std::fmod(phi + off, 2.0 * M_PI);
      if (a < 0) a += 2.0 * M_PI;
      bounds.push_back(a);
    }
  }
  if (bounds.empty()) {
    add_candidate(out, X, Eigen::Vector2d(1.0, 0.0));
    return;
  }
  std::sort(bounds.begin(), bounds.end());
  bounds.erase(std::unique(bounds.begin(), bounds.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-13; }),
               bounds.end());
  const std::size_t m = bounds.size();
  for (std::size_t i = 0; i < m; ++i) {
    const double a = bounds[i];
    const double next = (i + 1 < m) ? bounds[i + 1] : bounds[0] + 2.0 * M_PI;
    const double mid = 0.5 * (a + next);
    add_candidate(out, X, Eigen::Vector2d(std::cos(a), std::sin(a)));
    add_candidate(out, X, Eigen::Vector2d(std::cos(mid), std::sin(mid)));
  }
}

// Exhaustive generators for d = 3 from the arrangement of great circles on the
// sphere: circle poles, pairwise intersection vertices, arc midpoints between
// consecutive vertices on each circle, and small pushes of each arc midpoint
// off its circle to reach the two adjacent cells.
inline void candidates_3d(PatternMap& out, const MatrixXd& X) {
  using Eigen::Vector3d;
  std::vector<Vector3d> normals;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Vector3d n = X.row(i).transpose();
    if (n.norm() <= 0.0) continue;
    n.normalize();
    bool dup = false;
    for (const auto& m : normals)
      if ((m - n).norm() < 1e-12 || (m + n).norm() < 1e-12) dup = true;
    if (!dup) normals.push_back(n);
  }
  if (normals.empty()) {
    add_candidate(out, X, Vector3d(1, 0, 0));
    return;
  }

  const double push = 1e-5;
  std::vector<Vector3d> vertices;
  for (std::size_t i = 0; i < normals.size(); ++i)
    for (std::size_t j = i + 1; j < normals.size(); ++j) {
      Vector3d c = normals[i].cross(normals[j]);
      if (c.norm() <= 1e-12) continue;
      c.normalize();
      vertices.push_back(c);
      vertices.push_back(-c);
    }

  for (const auto& n : normals) {
    add_candidate(out, X, n);
    add_candidate(out, X, -n);
  }
  for (const auto& v : vertices) add_candidate(out, X, v);

  for (const auto& n : normals) {
    // orthonormal frame of the circle orthogonal to n
    Vector3d a = std::abs(n[0]) < 0.9 ? Vector3d(1, 0, 0) : Vector3d(0, 1, 0);
    a = (a - a.dot(n) * n).normalized();
    const Vector3d b = n.cross(a);

    std::vector<double> angles;
    for (const auto& v : vertices)
      if (std::abs(n.dot(v)) < 1e-9) angles.push_back(std::atan2(v.dot(b), v.dot(a)));
    std::vector<Vector3d> reps;
    if (angles.empty()) {
      reps = {a, b, -a, -b};
    } else {
      std::sort(angles.begin(), angles.end());
      angles.erase(std::unique(angles.begin(), angles.end(),
                               [](double p, double q) { return std::abs(p - q) < 1e-12; }),
                   angles.end());
      for (std::size_t i = 0; i < angles.size(); ++i) {
        const double next = (i + 1 < angles.size()) ? angles[i + 1] : angles[0] + 2.0 * M_PI;
        const double mid = 0.5 * (angles[i] + next);
        reps.push_back(std::cos(mid) * a + std::sin(mid) * b);
      }
    }
    for (const auto& e : reps) {
      add_candidate(out, X, e);
      add_candidate(out, X, e + push * n);
      add_candidate(out, X, e - push * n);
    }
  }
}

}  // namespace detail

inline std::vector<ActivationPattern> enumerate_patterns(const DatasetND& data,
                                                         Activation activation,
                                                         const EnumMethod& method) {
  const Eigen::Index d = data.d();
  detail::PatternMap found;

  if (method.kind == EnumMethod::Exhaustive) {
    if (d > 3)
      throw Error(errc::dimension_too_large,
                  "exhaustive enumeration supports d <= 3; use sampling for higher dimensions");
    if (d == 1) {
      VectorXd u(1);
      u[0] = 1.0;
      detail::add_candidate(found, data.X, u);
      u[0] = -1.0;
      detail::add_candidate(found, data.X, u);
    } else if (d == 2) {
      detail::candidates_2d(found, data.X);
    } else {
      detail::candidates_3d(found, data.X);
    }
  } else {
    for (Eigen::Index k = 0; k < method.count; ++k) {
      VectorXd u(d);
      for (Eigen::Index j = 0; j < d; ++j)
        u[j] = rng::normal(method.seed, 0x5A5A, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(j));
      detail::add_candidate(found, data.X, u);
    }
  }

  std::vector<ActivationPattern> out;
  out.reserve(found.size());
  for (auto& [mask, gen] : found) {
    ActivationPattern p;
    p.mask = mask;
    p.generator_u = gen;
    p.activation = activation;
    out.push_back(std::move(p));
  }
  // map iteration is already lexicographic by mask
  return out;
}

inline double pattern_count_bound(Eigen::Index n, Eigen::Index rank_r) {
  const double r = static_cast<double>(std::max<Eigen::Index>(rank_r, 1));
  const double m = static_cast<double>(n - 1);
  return 2.0 * r * std::pow(std::exp(1.0) * m / r, r);
}

// D_i X for one pattern: ReLU masks rows out, abs flips the sign of rows on
// the negative side.
inline MatrixXd apply_pattern(const ActivationPattern& p, const MatrixXd& X) {
  MatrixXd M = X;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double s = p.diag(static_cast<std::size_t>(i));
    M.row(i) *= s;
  }
  return M;
}

inline MatrixXd stack_patterns(const std::vector<ActivationPattern>& patterns, const MatrixXd& X) {
  const Eigen::Index n = X.rows(), d = X.cols();
  const Eigen::Index P = static_cast<Eigen::Index>(patterns.size());
  MatrixXd Xt(n, P * d);
  for (Eigen::Index i = 0; i < P; ++i)
    Xt.middleCols(i * d, d) = apply_pattern(patterns[static_cast<std::size_t>(i)], X);
  return Xt;
}

struct MultiSMSolution {
  std::vector<MatrixXd> W_blocks;  // P blocks, each d x d
  double objective = 0.0;
  std::vector<ActivationPattern> patterns;
};

// Objective of the pattern-block program evaluated at given blocks:
// 1/2 || sum_i D_i X W_i ||_F^2 + sum_i tr(D_i) tr(W_i).
inline double block_objective(const std::vector<ActivationPattern>& patterns, const MatrixXd& X,
                              const std::vector<MatrixXd>& W_blocks) {
  const Eigen::Index d = X.cols();
  MatrixXd S = MatrixXd::Zero(X.rows(), d);
  double lin = 0.0;
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    S += apply_pattern(patterns[i], X) * W_blocks[i];
    lin += patterns[i].trace() * W_blocks[i].trace();
  }
  return 0.5 * S.squaredNorm() + lin;
}

inline MultiSMSolution solve_sm_multivariate(const DatasetND& data,
                                             const std::vector<ActivationPattern>& patterns,
                                             double range_tol = 1e-8) {
  if (patterns.empty()) throw Error(errc::empty_data, "no patterns supplied");
  const Eigen::Index d = data.d();
  const Eigen::Index P = static_cast<Eigen::Index>(patterns.size());

  MatrixXd Xt = stack_patterns(patterns, data.X);
  MatrixXd Vt(P * d, d);
  for (Eigen::Index i = 0; i < P; ++i)
    Vt.middleRows(i * d, d) =
        patterns[static_cast<std::size_t>(i)].trace() * MatrixXd::Identity(d, d);

  Eigen::JacobiSVD<MatrixXd> svd(Xt, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? 1e-10 * s[0] : 0.0;

  // linear term must lie in the row space of the stacked data for a finite optimum
  MatrixXd VtV = svd.matrixV().transpose() * Vt;  // coordinates in the right singular basis
  MatrixXd proj = MatrixXd::Zero(Vt.rows(), Vt.cols());
  MatrixXd scaled = VtV;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > cutoff && s[i] > 0.0) {
      proj += svd.matrixV().col(i) * VtV.row(i);
      scaled.row(i) /= s[i] * s[i];
    } else {
      scaled.row(i).setZero();
    }
  }
  const double resid = (Vt - proj).norm();
  if (resid > range_tol * std::max(1.0, Vt.norm()))
    throw Error(errc::unbounded_objective,
                "linear term leaves the range of the stacked Gram matrix (residual " +
                    std::to_string(resid) + "); the program has no finite optimum");

  MatrixXd W = -svd.matrixV() * scaled;  // (Pd) x d

  MultiSMSolution sol;
  sol.patterns = patterns;
  sol.W_blocks.reserve(static_cast<std::size_t>(P));
  for (Eigen::Index i = 0; i < P; ++i) sol.W_blocks.push_back(W.middleRows(i * d, d));
  sol.objective = 0.5 * (Xt * W).squaredNorm() + (Vt.array() * W.array()).sum();
  return sol;
}

// Split u as u_pos - u_neg with both parts inside the pattern cone
// K = { w : (2D - I) X w >= 0 }. Feasibility search uses cyclic projections
// onto the margin-shifted halfspaces; a stall flags a likely cone that spans
// only a proper subspace.
inline std::pair<VectorXd, VectorXd> cone_split(const VectorXd& u, const ActivationPattern& pattern,
                                                const MatrixXd& X, double tol = 1e-8,
                                                int max_sweeps = 10000) {
  const Eigen::Index d = X.cols();
  if (u.size() != d) throw Error(errc::dimension_mismatch, "generator dim vs data dim");

  std::vector<VectorXd> rows;  // unit normals of the cone's halfspaces
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double sgn = pattern.mask[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
    VectorXd g = sgn * X.row(i).transpose();
    const double gn = g.norm();
    if (gn > 0.0) rows.push_back(g / gn);
  }

  auto min_margin = [&](const VectorXd& w) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& g : rows) m = std::min(m, g.dot(w));
    return rows.empty() ? 0.0 : m;
  };

  const double u_scale = std::max(1.0, u.norm());
  if (min_margin(u) >= -tol * u_scale) return {u, VectorXd::Zero(d)};
  if (min_margin(-u) >= -tol * u_scale) return {VectorXd::Zero(d), -u};

  // interior point of the cone: least-squares warm start, then cyclic
  // projections onto { w : g_i^T w >= delta }
  const double delta = 1e-3;
  MatrixXd G(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) G.row(static_cast<Eigen::Index>(i)) = rows[i];
  VectorXd s = prox::least_squares_min_norm(G, VectorXd::Ones(G.rows()));
  bool feasible = min_margin(s) >= delta * 0.999;
  for (int sweep = 0; sweep < max_sweeps && !feasible; ++sweep) {
    for (const auto& g : rows) {
      const double viol = delta - g.dot(s);
      if (viol > 0.0) s += viol * g;
    }
    feasible = min_margin(s) >= delta * 0.999;
  }
  if (!feasible)
    throw Error(errc::split_infeasible,
                "no interior point found for the pattern cone; the cone difference likely "
                "does not span the full space");

  double lam = 0.0;
  for (const auto& g : rows) {
    const double gu = g.dot(u), gs = g.dot(s);
    if (gu < 0.0) lam = std::max(lam, -gu / gs);
  }
  VectorXd u_neg = lam * s;
  VectorXd u_pos = u + u_neg;
  if (min_margin(u_pos) < -tol * std::max(1.0, u_pos.norm()) ||
      min_margin(u_neg) < -tol * std::max(1.0, u_neg.norm()))
    throw Error(errc::split_infeasible, "split failed the feasibility residual check");
  return {u_pos, u_neg};
}

// Network with at most 2 P d neurons realizing the block solution: factor each
// block by SVD and split every left factor inside its pattern cone.
inline TwoLayerParams reconstruct_network_nd(const MultiSMSolution& sol, const DatasetND& data) {
  const Eigen::Index d = data.d();
  const Activation act =
      sol.patterns.empty() ? Activation::ReLU : sol.patterns.front().activation;

  std::vector<VectorXd> us, vs;
  for (std::size_t i = 0; i < sol.patterns.size(); ++i) {
    const MatrixXd& W = sol.W_blocks[i];
    if (W.norm() == 0.0) continue;
    Eigen::JacobiSVD<MatrixXd> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& sv = svd.singularValues();
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
      if (sv[k] <= 1e-10 * sv[0]) continue;
      const VectorXd ut = sv[k] * svd.matrixU().col(k);
      const VectorXd vt = svd.matrixV().col(k);
      auto [u_pos, u_neg] = cone_split(ut, sol.patterns[i], data.X);
      if (u_pos.norm() > 0.0) {
        us.push_back(u_pos);
        vs.push_back(vt);
      }
      if (u_neg.norm() > 0.0) {
        us.push_back(u_neg);
        vs.push_back(-vt);
      }
    }
  }

  TwoLayerParams p = zero_network(act, static_cast<Eigen::Index>(us.size()), d);
  for (std::size_t j = 0; j < us.size(); ++j) {
    p.W1.row(static_cast<Eigen::Index>(j)) = us[j].transpose();
    p.W2.row(static_cast<Eigen::Index>(j)) = vs[j].transpose();
  }
  return p;
}

// Score matching objective of a bias-free multivariate network, with the
// activation-derivative convention sign(0) = +1 / indicator{z >= 0}.
inline double sm_objective_nd(const TwoLayerParams& p, const MatrixXd& X) {
  MatrixXd Z = X * p.W1.transpose();  // n x m
  MatrixXd S;
  double trace = 0.0;
  if (p.activation == Activation::ReLU) {
    MatrixXd A = Z.cwiseMax(0.0);
    S = A * p.W2;
    for (Eigen::Index j = 0; j < p.width(); ++j) {
      double cnt = 0.0;
      for (Eigen::Index i = 0; i < X.rows(); ++i) cnt += Z(i, j) >= 0.0 ? 1.0 : 0.0;
      trace += cnt * p.W1.row(j).dot(p.W2.row(j));
    }
  } else {
    MatrixXd A = Z.cwiseAbs();
    S = A * p.W2;
    for (Eigen::Index j = 0; j < p.width(); ++j) {
      double cnt = 0.0;
      for (Eigen::Index i = 0; i < X.rows(); ++i) cnt += sign_pos(Z(i, j));
      trace += cnt * p.W1.row(j).dot(p.W2.row(j));
    }
  }
  return 0.5 * S.squaredNorm() + trace;
}

}  // namespace scorekit::smnd
