#pragma once

#include <stdexcept>
#include <string>

namespace emohead {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape, rank or length disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced by or fed into a computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// API misuse, e.g. calling backward() on a non-scalar.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Unrecognized header fields in a tensor file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Truncated or oversized payload in a tensor file.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

// Bad manifest records or configuration values.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A gradient check saw two different loss values for the same input.
class FlakyCheckError : public Error {
 public:
  using Error::Error;
};

}  // namespace emohead
