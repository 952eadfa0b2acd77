#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace vmsid {

// Bad dimensions, bad config values, unparsable files.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Singular or near-singular data matrix.
struct EstimationError : NumericError {
  double condition_number;
  EstimationError(const std::string& what, double cond)
      : NumericError(what), condition_number(cond) {}
};

// Hankel of Markov parameters has numerical rank below the model order.
struct RankError : NumericError {
  Eigen::VectorXd singular_values;
  RankError(const std::string& what, Eigen::VectorXd sv)
      : NumericError(what), singular_values(std::move(sv)) {}
};

struct DesignError : NumericError {
  using NumericError::NumericError;
};

}  // namespace vmsid
