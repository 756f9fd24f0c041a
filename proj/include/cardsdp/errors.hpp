#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cardsdp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed instance file: bad JSON, missing key, wrong type.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A data invariant is violated. `invariant()` names it (e.g. "symmetry").
class ValidationError : public Error {
 public:
  ValidationError(std::string invariant, const std::string& detail)
      : Error(invariant + ": " + detail), invariant_(std::move(invariant)) {}

  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(std::size_t pivot)
      : Error("matrix not positive definite at pivot " + std::to_string(pivot)),
        pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// The corner entry of a lifted matrix is not 1.
class CornerNotUnit : public Error {
 public:
  using Error::Error;
};

/// Support enumeration would exceed its combination guard.
class TooLarge : public Error {
 public:
  explicit TooLarge(double combinations)
      : Error("support enumeration too large: " + std::to_string(combinations) +
              " combinations"),
        combinations_(combinations) {}

  double combinations() const noexcept { return combinations_; }

 private:
  double combinations_;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace cardsdp
