#pragma once

#include <stdexcept>
#include <string>

namespace logepi {

/// Raised when an input violates a documented precondition (bad dimension,
/// negative trace, step size above the stability bound, ...).
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when an iterative procedure fails to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when two routes to the same quantity disagree beyond tolerance.
class ConsistencyError : public std::runtime_error {
 public:
  explicit ConsistencyError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace logepi
