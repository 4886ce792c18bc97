#pragma once

#include <stdexcept>
#include <string>

namespace branchflow {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented invariant (non-Hermitian matrix, bad basis, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Scenario text could not be parsed. The message carries the field path.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Numerical routine did not converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Jump probability per step exceeded the hard cap, or a rate was not finite.
class RateCapError : public Error {
 public:
  RateCapError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Master-equation integration went unstable (negative undershoot).
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace branchflow
