#pragma once

#include <stdexcept>

namespace htecheck {

/// Raised when an estimator fails numerically (non-convergence, separation).
/// Input validation problems use std::invalid_argument.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace htecheck
