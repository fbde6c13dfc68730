#pragma once

#include <stdexcept>
#include <string>

namespace infostruct {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition or type invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Operands disagree in shape (support size, dimension, row count).
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A requested code cannot be realised with the configured alphabet.
class CapacityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A named key (label, set, measure) is absent.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// File-system or format failure while reading or writing artifacts.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace infostruct
