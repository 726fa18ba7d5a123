#pragma once

#include <stdexcept>
#include <string>

namespace gpnn {

/// Raised when a caller violates an operation's preconditions
/// (bad shapes, out-of-range parameters, malformed files).
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a numerical procedure fails, e.g. a Cholesky factorization
/// that stays indefinite after jitter.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gpnn
