#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace kleaf {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Violated precondition or mismatched shapes at an API boundary.
class ContractError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "contract"; }
};

/// Requested feature is not supported by the object (dimension, derivative order...).
class CapabilityError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "capability"; }
};

class DegenerateMetricError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "degenerate-metric"; }
};

/// A geodesic left the chart domain; `exit_time` is the curve parameter in [0,1].
class OutOfDomainError : public Error {
 public:
  OutOfDomainError(const std::string& what, double exit_time)
      : Error(what), exit_time_(exit_time) {}
  double exit_time() const noexcept { return exit_time_; }
  const char* kind() const noexcept override { return "out-of-domain"; }

 private:
  double exit_time_;
};

/// Right-hand side of (Δ+n)w = f has a component in the kernel.
class SolvabilityError : public Error {
 public:
  SolvabilityError(const std::string& what, double kernel_norm)
      : Error(what), kernel_norm_(kernel_norm) {}
  double kernel_norm() const noexcept { return kernel_norm_; }
  const char* kind() const noexcept override { return "solvability"; }

 private:
  double kernel_norm_;
};

/// Graph condition or another object invariant is violated.
class InvariantError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invariant"; }
};

class DegenerateLeafError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "degenerate-leaf"; }
};

/// Numerical accuracy monitor tripped (e.g. asymmetric second fundamental form).
class AccuracyError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "accuracy"; }
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }
  const char* kind() const noexcept override { return "non-convergence"; }

 private:
  std::vector<double> history_;
};

/// Outer center search found no zero of the kernel residual.
class OuterFailureError : public Error {
 public:
  OuterFailureError(const std::string& what, std::vector<double> samples)
      : Error(what), samples_(std::move(samples)) {}
  const std::vector<double>& samples() const noexcept { return samples_; }
  const char* kind() const noexcept override { return "outer-failure"; }

 private:
  std::vector<double> samples_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

}  // namespace kleaf
