#pragma once

// Langevin Monte Carlo with a score callable, annealed phases over a noise
// schedule, and the piecewise log-density the univariate closed-form score
// integrates to. Chains draw from counter-based RNG streams keyed by
// (seed, chain, step), so results are reproducible under any thread count.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "scorekit/common.hpp"
#include "scorekit/core.hpp"
#include "scorekit/rng.hpp"
#include "scorekit/sm1d.hpp"

namespace scorekit::sampling {

// Batch score: rows of the argument are chain states, rows of the result the
// score at those states. Must be safe for concurrent read-only use.
using BatchScore = std::function<MatrixXd(const MatrixXd&)>;

struct InitSpec {
  enum Kind { Uniform, Gaussian, FromPoints } kind = Uniform;
  double a = -1.0, b = 1.0;  // Uniform(lo, hi) or Gaussian(mean, sd)
  MatrixXd points;           // FromPoints: num_chains x d

  static InitSpec uniform(double lo, double hi) { return {Uniform, lo, hi, {}}; }
  static InitSpec gaussian(double mean, double sd) { return {Gaussian, mean, sd, {}}; }
  static InitSpec from_points(MatrixXd pts) { return {FromPoints, 0, 0, std::move(pts)}; }
};

struct ChainConfig {
  double eta = 1e-2;          // step size (base step for annealed runs)
  Eigen::Index steps_T = 100;
  Eigen::Index num_chains = 1;
  InitSpec init = InitSpec::uniform(-1.0, 1.0);
  std::uint64_t seed = 0;
  bool store_trace = true;    // keep the whole trajectory, not just final states
};

inline int thread_budget() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("SCOREKIT_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) hw = std::min(hw, cap);
  }
  return hw;
}

struct LmcResult {
  MatrixXd final_states;        // num_chains x d
  std::vector<MatrixXd> trace;  // steps_T entries of num_chains x d (when stored)
};

namespace detail {

inline MatrixXd initial_states(const ChainConfig& cfg, Eigen::Index d) {
  MatrixXd s(cfg.num_chains, d);
  switch (cfg.init.kind) {
    case InitSpec::Uniform:
      for (Eigen::Index c = 0; c < cfg.num_chains; ++c)
        for (Eigen::Index j = 0; j < d; ++j) {
          const double u = rng::uniform(rng::key(cfg.seed, static_cast<std::uint64_t>(c), 0,
                                                 static_cast<std::uint64_t>(j)));
          s(c, j) = cfg.init.a + (cfg.init.b - cfg.init.a) * u;
        }
      break;
    case InitSpec::Gaussian:
      for (Eigen::Index c = 0; c < cfg.num_chains; ++c)
        for (Eigen::Index j = 0; j < d; ++j)
          s(c, j) = cfg.init.a + cfg.init.b * rng::normal(cfg.seed, static_cast<std::uint64_t>(c),
                                                          0, static_cast<std::uint64_t>(j));
      break;
    case InitSpec::FromPoints:
      if (cfg.init.points.rows() != cfg.num_chains || cfg.init.points.cols() != d)
        throw Error(errc::dimension_mismatch, "FromPoints init must be num_chains x d");
      s = cfg.init.points;
      break;
  }
  return s;
}

// One phase of x <- x + eta s(x) + sqrt(2 eta) z over a block of chains.
// step_offset keeps RNG keys globally indexed across annealed phases.
inline void run_phase_block(const BatchScore& score, double eta, Eigen::Index steps,
                            Eigen::Index step_offset, std::uint64_t seed, Eigen::Index chain_begin,
                            MatrixXd& states, std::vector<MatrixXd>* trace) {
  const Eigen::Index d = states.cols();
  const double noise_scale = std::sqrt(2.0 * eta);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const std::uint64_t step_key = static_cast<std::uint64_t>(step_offset + t + 1);
    MatrixXd sc = score(states);
    if (sc.rows() != states.rows() || sc.cols() != d)
      throw Error(errc::dimension_mismatch, "score callable returned a wrong shape");
    for (Eigen::Index c = 0; c < states.rows(); ++c) {
      const std::uint64_t chain_key = static_cast<std::uint64_t>(chain_begin + c);
      for (Eigen::Index j = 0; j < d; ++j) {
        const double z = rng::normal(seed, chain_key, step_key, static_cast<std::uint64_t>(j));
        states(c, j) += eta * sc(c, j) + noise_scale * z;
        if (!std::isfinite(states(c, j)))
          throw Error(errc::non_finite_state,
                      "chain " + std::to_string(chain_begin + c) + " became non-finite at step " +
                          std::to_string(step_offset + t + 1));
      }
    }
    if (trace)
      (*trace)[static_cast<std::size_t>(step_offset + t)].middleRows(chain_begin, states.rows()) =
          states;
  }
}

inline void run_phase(const BatchScore& score, double eta, Eigen::Index steps,
                      Eigen::Index step_offset, const ChainConfig& cfg, MatrixXd& states,
                      std::vector<MatrixXd>* trace) {
  const int threads = std::min<int>(thread_budget(), static_cast<int>(states.rows()));
  if (threads <= 1) {
    run_phase_block(score, eta, steps, step_offset, cfg.seed, 0, states, trace);
    return;
  }
  const Eigen::Index chunk = (states.rows() + threads - 1) / threads;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  std::vector<MatrixXd> blocks(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    const Eigen::Index lo = w * chunk;
    const Eigen::Index hi = std::min(states.rows(), lo + chunk);
    if (lo >= hi) break;
    blocks[static_cast<std::size_t>(w)] = states.middleRows(lo, hi - lo);
    pool.emplace_back([&, w, lo, hi]() {
      try {
        run_phase_block(score, eta, steps, step_offset, cfg.seed, lo,
                        blocks[static_cast<std::size_t>(w)], trace);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (int w = 0; w < threads; ++w) {
    const Eigen::Index lo = w * chunk;
    const Eigen::Index hi = std::min(states.rows(), lo + chunk);
    if (lo >= hi) break;
    states.middleRows(lo, hi - lo) = blocks[static_cast<std::size_t>(w)];
  }
}

}  // namespace detail

inline LmcResult run_lmc(const BatchScore& score, const ChainConfig& cfg, Eigen::Index d) {
  if (cfg.eta <= 0.0) throw Error(errc::bad_epsilon, "step size must be positive");
  if (cfg.steps_T < 1) throw Error(errc::length_mismatch, "need at least one step");

  LmcResult res;
  MatrixXd states = detail::initial_states(cfg, d);
  std::vector<MatrixXd>* trace_ptr = nullptr;
  if (cfg.store_trace) {
    res.trace.assign(static_cast<std::size_t>(cfg.steps_T), MatrixXd::Zero(cfg.num_chains, d));
    trace_ptr = &res.trace;
  }
  detail::run_phase(score, cfg.eta, cfg.steps_T, 0, cfg, states, trace_ptr);
  res.final_states = std::move(states);
  return res;
}

struct AnnealedResult {
  MatrixXd final_states;
  std::vector<MatrixXd> snapshots;  // states after each level (levels + 1 with the init first)
};

// Sequential LMC phases, one per noise level, each continuing from the
// previous state. The level step size is eta * sigma_l^2.
inline AnnealedResult run_annealed(const std::vector<BatchScore>& scores_per_level,
                                   const NoiseSchedule& schedule, const ChainConfig& cfg,
                                   Eigen::Index d) {
  if (scores_per_level.size() != schedule.levels())
    throw Error(errc::length_mismatch, "one score callable per noise level required");
  if (cfg.eta <= 0.0) throw Error(errc::bad_epsilon, "step size must be positive");

  AnnealedResult res;
  MatrixXd states = detail::initial_states(cfg, d);
  res.snapshots.push_back(states);
  Eigen::Index step_offset = 0;
  for (std::size_t level = 0; level < schedule.levels(); ++level) {
    const double eta = cfg.eta * schedule.sigmas[level] * schedule.sigmas[level];
    detail::run_phase(scores_per_level[level], eta, schedule.steps_per_level[level], step_offset,
                      cfg, states, nullptr);
    step_offset += schedule.steps_per_level[level];
    res.snapshots.push_back(states);
  }
  res.final_states = std::move(states);
  return res;
}

// Unnormalized target of the univariate ReLU closed-form score: log pi is the
// piecewise quadratic whose derivative is the predicted score, with branch
// constants matched for continuity at the extreme data points.
struct TargetDensity1D {
  double mu = 0, v = 0, n = 0, beta = 0, t = 0;
  double x1 = 0, xn = 0;
  // log pi = a x^2 + b x + c per branch
  double a_int = 0, b_int = 0, c_int = 0;
  double a_left = 0, b_left = 0, c_left = 0;
  double a_right = 0, b_right = 0, c_right = 0;
};

inline TargetDensity1D make_target_density(const Dataset1D& data, double beta, double t) {
  const double n = static_cast<double>(data.n());
  const double nv = n * data.v;

  ArchitectureConfig cfg;
  cfg.activation = Activation::ReLU;
  cfg.skip = false;
  cfg.beta = beta;
  const auto th = sm1d::compute_beta_thresholds(data, cfg);
  if (beta <= th.beta_low || beta >= n)
    throw Error(errc::beta_out_of_regime,
                "target density is defined for beta in (" + std::to_string(th.beta_low) + ", " +
                    std::to_string(n) + ")");
  const double t_max = (n - beta) / (2.0 * nv);
  if (std::abs(t) > t_max * (1.0 + 1e-12) + 1e-15)
    throw Error(errc::t_out_of_range, "|t| exceeds " + std::to_string(t_max));

  TargetDensity1D td;
  td.mu = data.mu;
  td.v = data.v;
  td.n = n;
  td.beta = beta;
  td.t = t;
  td.x1 = data.points[0];
  td.xn = data.points[data.n() - 1];

  const double bn = beta - n;  // negative in this regime
  td.a_int = bn / (2.0 * nv);
  td.b_int = -td.mu * bn / nv;
  td.c_int = 0.0;

  td.a_left = bn / (4.0 * nv) - 0.5 * t;
  td.b_left = (bn / (2.0 * nv) + t) * td.x1 + td.mu * (n - beta) / nv;
  td.c_left = ((n - beta) / (4.0 * nv) - 0.5 * t) * td.x1 * td.x1;

  td.a_right = bn / (4.0 * nv) + 0.5 * t;
  td.b_right = -((n - beta) / (2.0 * nv) + t) * td.xn + td.mu * (n - beta) / nv;
  td.c_right = (0.5 * t + (n - beta) / (4.0 * nv)) * td.xn * td.xn;

  // absorb rounding so log pi is continuous at the extreme points
  auto eval = [](double a, double b, double c, double x) { return (a * x + b) * x + c; };
  td.c_left += eval(td.a_int, td.b_int, td.c_int, td.x1) -
               eval(td.a_left, td.b_left, td.c_left, td.x1);
  td.c_right += eval(td.a_int, td.b_int, td.c_int, td.xn) -
                eval(td.a_right, td.b_right, td.c_right, td.xn);
  return td;
}

inline double log_target_density_unnormalized(double x, const TargetDensity1D& td) {
  if (x < td.x1) return (td.a_left * x + td.b_left) * x + td.c_left;
  if (x > td.xn) return (td.a_right * x + td.b_right) * x + td.c_right;
  return (td.a_int * x + td.b_int) * x + td.c_int;
}

inline double target_density_unnormalized(double x, const TargetDensity1D& td) {
  return std::exp(log_target_density_unnormalized(x, td));
}

// Adaptors turning fitted objects into batch score callables.

inline BatchScore batch_score(const sm1d::PiecewiseLinearScore& s) {
  return [s](const MatrixXd& states) {
    MatrixXd out(states.rows(), states.cols());
    for (Eigen::Index i = 0; i < states.rows(); ++i) out(i, 0) = s(states(i, 0));
    return out;
  };
}

inline BatchScore batch_score(const TwoLayerParams& p) {
  return [p](const MatrixXd& states) { return evaluate_network(p, states); };
}

// Default step size for sampling a fitted univariate score: the target's
// interior variance n v / (n - beta) times eta_scale.
inline constexpr double default_eta_scale = 5e-3;

inline double default_eta(const Dataset1D& data, double beta,
                          double eta_scale = default_eta_scale) {
  const double n = static_cast<double>(data.n());
  return n * data.v / (n - beta) * eta_scale;
}

}  // namespace scorekit::sampling
