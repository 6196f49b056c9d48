#pragma once

#include <stdexcept>
#include <string>

namespace lfac {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a physical or structural invariant (geometry, bounds, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not produce a trustworthy result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// ZY has an eigenvalue on the closed negative real axis, so the principal
/// square root is ambiguous.
class BranchCutError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A matrix that must be inverted is singular or too ill-conditioned.
class IllConditioned : public NumericalError {
 public:
  IllConditioned(const std::string& what, double condition)
      : NumericalError(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

/// Case or design document does not match the schema, or references dangle.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace lfac
