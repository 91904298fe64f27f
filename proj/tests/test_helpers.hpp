#pragma once

#include <Eigen/Dense>

#include <catch2/catch_amalgamated.hpp>

#include "scorekit/rng.hpp"

namespace testkit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Deterministic normal deviates for test fixtures.
inline VectorXd randn_vec(Eigen::Index n, std::uint64_t seed, std::uint64_t stream = 7) {
  scorekit::rng::NormalStream s(seed, stream);
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = s.next();
  return v;
}

inline MatrixXd randn_mat(Eigen::Index r, Eigen::Index c, std::uint64_t seed,
                          std::uint64_t stream = 11) {
  scorekit::rng::NormalStream s(seed, stream);
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = s.next();
  return m;
}

inline double max_abs_diff(const VectorXd& a, const VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testkit
