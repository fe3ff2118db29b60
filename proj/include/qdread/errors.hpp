#pragma once

#include <stdexcept>
#include <string>

namespace qdread {

/// Invalid parameters, malformed configuration, or a bad override.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on a physical argument was violated (negative field, T <= 0, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure: quadrature or root finding did not converge.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class QuadratureError : public SolverError {
 public:
  QuadratureError(const std::string& what, double estimate, double error_bound)
      : SolverError(what), estimate_(estimate), error_bound_(error_bound) {}

  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

}  // namespace qdread
