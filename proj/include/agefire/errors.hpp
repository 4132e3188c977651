#pragma once

#include <stdexcept>
#include <string>

namespace agefire {

// Base of every error thrown by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or out-of-range data (exit code 2).
class InputError : public Error {
 public:
  using Error::Error;
};

// The operator L_pi vanishes: the measure carries no mass away from 0.
class DegenerateOperatorError : public InputError {
 public:
  DegenerateOperatorError()
      : InputError("degenerate operator: measure is supported on {0}") {}
};

// Initial data with leading eigenvalue above 1.
class SupercriticalError : public InputError {
 public:
  explicit SupercriticalError(double lambda)
      : InputError("age-supercritical initial measure (lambda = " + std::to_string(lambda) + ")"),
        lambda_(lambda) {}
  double lambda() const noexcept { return lambda_; }

 private:
  double lambda_;
};

// A numerical tolerance could not be met (exit code 3).
class AccuracyError : public Error {
 public:
  using Error::Error;
};

}  // namespace agefire
