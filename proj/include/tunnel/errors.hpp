#pragma once

#include <stdexcept>
#include <string>

namespace tunnel {

/// Thrown when an input violates an operation's precondition.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Thrown when a computation cannot produce a trustworthy number.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tunnel
