#pragma once

// Shared data model: datasets with cached statistics, architecture
// configuration, noise schedules, and the two-layer network parameter set.
// All types are immutable after construction and safe to share across threads.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <vector>

#include "scorekit/common.hpp"

namespace scorekit {

enum class Activation { ReLU, Abs };

inline const char* activation_name(Activation a) {
  return a == Activation::ReLU ? "relu" : "abs";
}

// Univariate training set. Points are sorted ascending and must be distinct;
// mu is the sample mean and v the biased sample variance (divisor n).
struct Dataset1D {
  VectorXd points;
  double mu = 0.0;
  double v = 0.0;

  Eigen::Index n() const { return points.size(); }
};

inline Dataset1D make_dataset_1d(VectorXd raw) {
  const Eigen::Index n = raw.size();
  if (n < 2) throw Error(errc::too_few_points, "need at least 2 samples, got " + std::to_string(n));
  std::sort(raw.data(), raw.data() + n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (raw[i + 1] - raw[i] <= 1e-12) {
      throw Error(errc::duplicate_points,
                  "samples " + std::to_string(raw[i]) + " and " + std::to_string(raw[i + 1]) +
                      " coincide within 1e-12");
    }
  }
  Dataset1D d;
  d.points = std::move(raw);
  d.mu = d.points.mean();
  d.v = (d.points.array() - d.mu).square().sum() / static_cast<double>(n);
  return d;
}

inline Dataset1D make_dataset_1d(const std::vector<double>& raw) {
  return make_dataset_1d(Eigen::Map<const VectorXd>(raw.data(), static_cast<Eigen::Index>(raw.size())));
}

// Multivariate training set with cached numerical rank.
struct DatasetND {
  MatrixXd X;  // n x d, one sample per row
  Eigen::Index rank_r = 0;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index d() const { return X.cols(); }
};

inline Eigen::Index numerical_rank(const MatrixXd& A, double rel_cutoff = 1e-10) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] <= 0.0) return 0;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > rel_cutoff * s[0]) ++r;
  return r;
}

inline DatasetND make_dataset_nd(MatrixXd raw) {
  if (raw.rows() < 1 || raw.cols() < 1) throw Error(errc::empty_data, "empty data matrix");
  DatasetND d;
  d.X = std::move(raw);
  d.rank_r = numerical_rank(d.X);
  return d;
}

// Two-layer architecture selection. beta is the weight decay on the first and
// second layer weights; skip enables the V x term. Feasibility constraints on
// beta are enforced where the convex program is built, not here.
struct ArchitectureConfig {
  Activation activation = Activation::ReLU;
  bool skip = false;
  double beta = 1.0;
  Eigen::Index m_hint = 0;  // hidden width for reconstruction reporting; 0 = derived
};

struct NoiseSchedule {
  std::vector<double> sigmas;            // strictly decreasing, > 0
  std::vector<Eigen::Index> steps_per_level;

  std::size_t levels() const { return sigmas.size(); }
};

inline NoiseSchedule make_noise_schedule(std::vector<double> sigmas, std::vector<Eigen::Index> steps) {
  if (sigmas.size() != steps.size())
    throw Error(errc::length_mismatch, "sigmas and steps_per_level differ in length");
  if (sigmas.empty()) throw Error(errc::empty_data, "empty schedule");
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    if (sigmas[k] <= 0.0) throw Error(errc::bad_epsilon, "noise levels must be positive");
    if (k + 1 < sigmas.size() && sigmas[k] <= sigmas[k + 1])
      throw Error(errc::bad_epsilon, "noise levels must be strictly decreasing");
    if (steps[k] < 1) throw Error(errc::length_mismatch, "each level needs at least one step");
  }
  return NoiseSchedule{std::move(sigmas), std::move(steps)};
}

// s(x) = W2 sigma(W1 x + b1) + V x + b2 with x in R^d.
// W1 is m x d, b1 is m, W2 is d x m (stored transposed as m x d rows), V is d x d.
struct TwoLayerParams {
  Activation activation = Activation::ReLU;
  MatrixXd W1;   // m x d, row j = first-layer weight of neuron j
  VectorXd b1;   // m
  MatrixXd W2;   // m x d, row j = second-layer weight of neuron j (column of W2 proper)
  VectorXd b2;   // d
  MatrixXd V;    // d x d, zero when no skip connection

  Eigen::Index width() const { return W1.rows(); }
  Eigen::Index dim() const { return W1.cols(); }
};

inline TwoLayerParams zero_network(Activation act, Eigen::Index m, Eigen::Index d) {
  TwoLayerParams p;
  p.activation = act;
  p.W1 = MatrixXd::Zero(m, d);
  p.b1 = VectorXd::Zero(m);
  p.W2 = MatrixXd::Zero(m, d);
  p.b2 = VectorXd::Zero(d);
  p.V = MatrixXd::Zero(d, d);
  return p;
}

// Forward evaluation on a batch of inputs (rows of X). Returns n x d scores.
inline MatrixXd evaluate_network(const TwoLayerParams& p, const MatrixXd& X) {
  if (X.cols() != p.dim())
    throw Error(errc::dimension_mismatch,
                "input dim " + std::to_string(X.cols()) + " vs network dim " + std::to_string(p.dim()));
  MatrixXd Z = X * p.W1.transpose();           // n x m
  Z.rowwise() += p.b1.transpose();
  if (p.activation == Activation::ReLU)
    Z = Z.cwiseMax(0.0);
  else
    Z = Z.cwiseAbs();
  MatrixXd out = Z * p.W2;                     // n x d
  out.noalias() += X * p.V.transpose();
  out.rowwise() += p.b2.transpose();
  return out;
}

// Univariate convenience wrapper.
inline VectorXd evaluate_network(const TwoLayerParams& p, const VectorXd& x) {
  if (p.dim() != 1) throw Error(errc::dimension_mismatch, "expected a univariate network");
  MatrixXd X = x;
  return evaluate_network(p, X).col(0);
}

inline double evaluate_network(const TwoLayerParams& p, double x) {
  VectorXd xs(1);
  xs[0] = x;
  return evaluate_network(p, xs)[0];
}

}  // namespace scorekit
