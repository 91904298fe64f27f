#pragma once

// Non-convex reference trainer: full-batch Adam on the univariate score
// matching and denoising score matching objectives with manually derived
// gradients. The activation-derivative factors inside the trace term are held
// constant in the backward pass (subgradient convention), matching the
// objective they certify against.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "scorekit/common.hpp"
#include "scorekit/core.hpp"
#include "scorekit/rng.hpp"

namespace scorekit::baseline {

enum class Objective { SM, DSM };

struct TrainConfig {
  double learning_rate = 1e-2;
  Eigen::Index epochs = 500;
  Eigen::Index m = 0;  // hidden width; 0 = 4n default
  std::uint64_t seed = 0;
  Objective objective = Objective::SM;
  ArchitectureConfig arch;
};

// Adam moment defaults; the problem statement fixes only the step size, the
// rest follow common practice and are echoed in run manifests.
inline constexpr double adam_beta1 = 0.9;
inline constexpr double adam_beta2 = 0.999;
inline constexpr double adam_eps = 1e-8;

namespace detail {

inline void check_univariate(const TwoLayerParams& p) {
  if (p.dim() != 1) throw Error(errc::dimension_mismatch, "baseline losses are univariate");
}

struct Forward {
  MatrixXd act;     // n x m, sigma(z)
  MatrixXd actp;    // n x m, sigma'(z) with sign(0) = +1
  VectorXd s;       // n, network outputs
};

inline Forward forward(const TwoLayerParams& p, const VectorXd& xs) {
  Forward f;
  const Eigen::Index n = xs.size(), m = p.width();
  MatrixXd Z = xs * p.W1.col(0).transpose();
  Z.rowwise() += p.b1.transpose();
  f.act.resize(n, m);
  f.actp.resize(n, m);
  if (p.activation == Activation::ReLU) {
    f.act = Z.cwiseMax(0.0);
    f.actp = (Z.array() >= 0.0).cast<double>();
  } else {
    f.act = Z.cwiseAbs();
    f.actp = Z.unaryExpr([](double z) { return sign_pos(z); });
  }
  f.s = f.act * p.W2.col(0);
  f.s.array() += p.V(0, 0) * xs.array() + p.b2[0];
  return f;
}

}  // namespace detail

// Empirical score matching loss with weight decay:
//   sum_i [ w^T (alpha .* sigma'(w x_i + b)) + V ] + 1/2 sum_i s(x_i)^2
//   + beta/2 (||w||^2 + ||alpha||^2)
inline double loss_sm(const TwoLayerParams& p, const VectorXd& xs, double beta) {
  detail::check_univariate(p);
  const auto f = detail::forward(p, xs);
  const VectorXd wa = p.W1.col(0).cwiseProduct(p.W2.col(0));
  const double trace = (f.actp * wa).sum() + static_cast<double>(xs.size()) * p.V(0, 0);
  const double reg = 0.5 * beta * (p.W1.col(0).squaredNorm() + p.W2.col(0).squaredNorm());
  return trace + 0.5 * f.s.squaredNorm() + reg;
}

// Empirical denoising score matching loss: sum_i 1/2 (s(x_i) - l_i)^2 plus the
// same weight decay. The inputs are the already-perturbed points and their
// regression labels.
inline double loss_dsm(const TwoLayerParams& p, const VectorXd& xs, const VectorXd& labels,
                       double beta) {
  detail::check_univariate(p);
  if (labels.size() != xs.size())
    throw Error(errc::dimension_mismatch, "labels and points differ in length");
  const auto f = detail::forward(p, xs);
  const double reg = 0.5 * beta * (p.W1.col(0).squaredNorm() + p.W2.col(0).squaredNorm());
  return 0.5 * (f.s - labels).squaredNorm() + reg;
}

struct Gradients {
  VectorXd w, b1, alpha;
  double b2 = 0.0, V = 0.0;
};

inline Gradients analytic_gradient(const TwoLayerParams& p, const VectorXd& xs,
                                   const std::optional<VectorXd>& labels, Objective obj,
                                   double beta) {
  detail::check_univariate(p);
  const auto f = detail::forward(p, xs);
  const VectorXd w = p.W1.col(0), alpha = p.W2.col(0);
  const Eigen::Index n = xs.size();

  Gradients g;
  if (obj == Objective::SM) {
    const VectorXd colsum = f.actp.colwise().sum();
    const VectorXd gts = f.actp.transpose() * f.s;                      // sum_i sigma'_ij s_i
    const VectorXd gtsx = f.actp.transpose() * f.s.cwiseProduct(xs);    // sum_i sigma'_ij s_i x_i
    g.alpha = f.act.transpose() * f.s + w.cwiseProduct(colsum) + beta * alpha;
    g.w = alpha.cwiseProduct(colsum) + alpha.cwiseProduct(gtsx) + beta * w;
    g.b1 = alpha.cwiseProduct(gts);
    g.b2 = f.s.sum();
    g.V = static_cast<double>(n) + f.s.dot(xs);
  } else {
    const VectorXd r = f.s - *labels;
    const VectorXd gtr = f.actp.transpose() * r;
    const VectorXd gtrx = f.actp.transpose() * r.cwiseProduct(xs);
    g.alpha = f.act.transpose() * r + beta * alpha;
    g.w = alpha.cwiseProduct(gtrx) + beta * w;
    g.b1 = alpha.cwiseProduct(gtr);
    g.b2 = r.sum();
    g.V = r.dot(xs);
  }
  return g;
}

struct TrainResult {
  TwoLayerParams params;
  std::vector<double> loss_curve;  // one entry per epoch
  bool diverged = false;           // loss became non-finite; run stopped and reported
};

inline TrainResult adam_train(const TrainConfig& cfg, const VectorXd& xs,
                              const std::optional<VectorXd>& labels = std::nullopt) {
  if (cfg.learning_rate <= 0.0) throw Error(errc::bad_beta, "learning rate must be positive");
  if (cfg.epochs < 1) throw Error(errc::bad_beta, "need at least one epoch");
  if (cfg.objective == Objective::DSM && !labels)
    throw Error(errc::dimension_mismatch, "DSM training needs labels");

  const Eigen::Index n = xs.size();
  const Eigen::Index m = cfg.m > 0 ? cfg.m : 4 * n;
  TwoLayerParams p = zero_network(cfg.arch.activation, m, 1);

  rng::NormalStream init(cfg.seed, 0x1717);
  const double sd = 1.0 / std::sqrt(static_cast<double>(m));
  for (Eigen::Index j = 0; j < m; ++j) p.W1(j, 0) = sd * init.next();
  for (Eigen::Index j = 0; j < m; ++j) p.b1[j] = sd * init.next();
  for (Eigen::Index j = 0; j < m; ++j) p.W2(j, 0) = sd * init.next();

  const bool train_skip = cfg.arch.skip && cfg.objective == Objective::SM;
  const double beta = cfg.arch.beta;

  VectorXd mw = VectorXd::Zero(m), vw = VectorXd::Zero(m);
  VectorXd mb = VectorXd::Zero(m), vb = VectorXd::Zero(m);
  VectorXd ma = VectorXd::Zero(m), va = VectorXd::Zero(m);
  double mb2 = 0, vb2 = 0, mV = 0, vV = 0;

  auto adam_step = [&](double& theta, double& m1, double& v2, double grad, double corr1,
                       double corr2) {
    m1 = adam_beta1 * m1 + (1 - adam_beta1) * grad;
    v2 = adam_beta2 * v2 + (1 - adam_beta2) * grad * grad;
    theta -= cfg.learning_rate * (m1 / corr1) / (std::sqrt(v2 / corr2) + adam_eps);
  };

  TrainResult res;
  res.loss_curve.reserve(cfg.epochs);
  for (Eigen::Index epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const Gradients g = analytic_gradient(p, xs, labels, cfg.objective, beta);
    const double corr1 = 1.0 - std::pow(adam_beta1, static_cast<double>(epoch));
    const double corr2 = 1.0 - std::pow(adam_beta2, static_cast<double>(epoch));
    for (Eigen::Index j = 0; j < m; ++j) {
      adam_step(p.W1(j, 0), mw[j], vw[j], g.w[j], corr1, corr2);
      adam_step(p.b1[j], mb[j], vb[j], g.b1[j], corr1, corr2);
      adam_step(p.W2(j, 0), ma[j], va[j], g.alpha[j], corr1, corr2);
    }
    adam_step(p.b2[0], mb2, vb2, g.b2, corr1, corr2);
    if (train_skip) adam_step(p.V(0, 0), mV, vV, g.V, corr1, corr2);

    const double loss = cfg.objective == Objective::SM ? loss_sm(p, xs, beta)
                                                       : loss_dsm(p, xs, *labels, beta);
    res.loss_curve.push_back(loss);
    if (!std::isfinite(loss)) {
      res.diverged = true;
      break;
    }
  }
  res.params = std::move(p);
  return res;
}

// Central finite differences (h = 1e-5) against the analytic gradient.
// Returns the max relative error over all parameters, scale-clamped at 1.
inline double grad_check(const TwoLayerParams& params, const VectorXd& xs,
                         const std::optional<VectorXd>& labels, Objective obj, double beta) {
  const double h = 1e-5;
  TwoLayerParams p = params;
  const Gradients g = analytic_gradient(p, xs, labels, obj, beta);

  auto loss_at = [&]() {
    return obj == Objective::SM ? loss_sm(p, xs, beta) : loss_dsm(p, xs, *labels, beta);
  };
  auto fd = [&](double& theta) {
    const double orig = theta;
    theta = orig + h;
    const double lp = loss_at();
    theta = orig - h;
    const double lm = loss_at();
    theta = orig;
    return (lp - lm) / (2.0 * h);
  };

  double worst = 0.0;
  auto compare = [&](double analytic, double numeric) {
    const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };

  for (Eigen::Index j = 0; j < p.width(); ++j) {
    compare(g.w[j], fd(p.W1(j, 0)));
    compare(g.b1[j], fd(p.b1[j]));
    compare(g.alpha[j], fd(p.W2(j, 0)));
  }
  compare(g.b2, fd(p.b2[0]));
  compare(g.V, fd(p.V(0, 0)));
  return worst;
}

}  // namespace scorekit::baseline
