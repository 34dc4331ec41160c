#pragma once

#include <stdexcept>
#include <string>

namespace buzzdet {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Channel lengths disagree beyond the tolerated slack.
class AlignmentError : public Error {
public:
  using Error::Error;
};

// Input values violate a data invariant (non-binary labels, bad intervals, ...).
class ValidationError : public Error {
public:
  using Error::Error;
};

// Invalid or infeasible configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Tensor shapes are inconsistent.
class ShapeError : public Error {
public:
  using Error::Error;
};

// Argument outside the mathematical domain of the operation.
class DomainError : public Error {
public:
  using Error::Error;
};

// NaN or Inf produced inside a computation.
class NumericError : public Error {
public:
  using Error::Error;
};

// Malformed file, bad magic, version mismatch or truncated payload.
class FormatError : public Error {
public:
  using Error::Error;
};

}  // namespace buzzdet
