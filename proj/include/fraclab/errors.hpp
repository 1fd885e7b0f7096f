#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fraclab {

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Coincident points where a kernel is genuinely singular.
class SingularityError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Requested dimension or formula branch is not implemented.
class UnsupportedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid experiment or object configuration.
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Iterative method failed to converge (e.g. power iteration stagnation).
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical method could not meet its tolerance. Carries the best
/// estimate reached and its error bound so callers can still inspect them.
class AccuracyError : public std::runtime_error {
 public:
  AccuracyError(const std::string& what, double estimate, double error_bound)
      : std::runtime_error(what + " (estimate " + std::to_string(estimate) +
                           ", error bound " + std::to_string(error_bound) + ")"),
        estimate_(estimate),
        error_bound_(error_bound) {}

  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

/// A multi-step construction gave up after its retry schedule.
class ConstructionError : public std::runtime_error {
 public:
  ConstructionError(const std::string& what, std::vector<double> tried)
      : std::runtime_error(what), tried_(std::move(tried)) {}

  const std::vector<double>& tried() const noexcept { return tried_; }

 private:
  std::vector<double> tried_;
};

}  // namespace fraclab
