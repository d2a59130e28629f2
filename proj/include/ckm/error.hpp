#pragma once

#include <stdexcept>
#include <string>

namespace ckm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A hyperparameter is out of its valid range (sigma <= 0, tau <= 0, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data violates an operation precondition (N < k, length mismatch, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an API contract (non-scalar loss, non-one-hot H, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed delimited text.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary container (bad magic, truncated payload).
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A tensor operation produced NaN or Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace ckm
