#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace destab {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible matrix or vector shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An iterative kernel failed to converge, or produced non-finite values.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Linear solve against a singular or ill-conditioned matrix.
class SingularityError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Transfer function evaluated at (or numerically on top of) a pole.
class PoleEvaluationError : public NumericError {
 public:
  using NumericError::NumericError;
};

// An operation was called outside its domain (unstable plant, bad options).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// det(I - Dtilde*D) vanishes, or a nonlinear loop has an algebraic cycle.
class WellPosednessError : public Error {
 public:
  using Error::Error;
};

// A complex interpolation value that no real-coefficient rational function
// can attain at the requested frequency.
class UnrepresentableError : public Error {
 public:
  using Error::Error;
};

// Expression-language parse failure; line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
              message),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace destab
