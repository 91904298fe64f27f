#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace scorekit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr const char* version_string = "0.1.0";

enum class errc {
  too_few_points,
  duplicate_points,
  empty_data,
  dimension_mismatch,
  dimension_too_large,
  dimension_too_small,
  beta_too_small,
  beta_out_of_regime,
  t_out_of_range,
  not_applicable,
  unbounded_objective,
  split_infeasible,
  bad_epsilon,
  bad_beta,
  length_mismatch,
  non_finite_state,
  solver_not_converged,
  io_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::too_few_points: return "TooFewPoints";
    case errc::duplicate_points: return "DuplicatePoints";
    case errc::empty_data: return "EmptyData";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::dimension_too_large: return "DimensionTooLarge";
    case errc::dimension_too_small: return "DimensionTooSmall";
    case errc::beta_too_small: return "BetaTooSmall";
    case errc::beta_out_of_regime: return "BetaOutOfRegime";
    case errc::t_out_of_range: return "TOutOfRange";
    case errc::not_applicable: return "NotApplicable";
    case errc::unbounded_objective: return "UnboundedObjective";
    case errc::split_infeasible: return "SplitInfeasible";
    case errc::bad_epsilon: return "BadEpsilon";
    case errc::bad_beta: return "BadBeta";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::non_finite_state: return "NonFiniteState";
    case errc::solver_not_converged: return "SolverNotConverged";
    case errc::io_error: return "IoError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

// sign with sign(0) = +1, applied throughout program construction and KKT checks
inline double sign_pos(double x) { return x >= 0.0 ? 1.0 : -1.0; }

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace scorekit
