#pragma once

#include <stdexcept>
#include <string>

namespace hsic_infogan {

/// Base of every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct ContractError : Error {
  using Error::Error;
};

struct ValidationError : Error {
  using Error::Error;
};

struct IndexError : Error {
  using Error::Error;
};

struct DegenerateInputError : Error {
  using Error::Error;
};

/// Malformed file contents (bad magic, out-of-domain values).
struct FormatError : Error {
  using Error::Error;
};

/// Payload shorter or longer than its header announces.
struct LengthError : FormatError {
  using FormatError::FormatError;
};

struct VersionError : FormatError {
  using FormatError::FormatError;
};

struct ShapeError : FormatError {
  using FormatError::FormatError;
};

struct IoError : Error {
  using Error::Error;
};

/// Bad command-line usage; maps to exit code 2.
struct UsageError : Error {
  using Error::Error;
};

/// A training step produced a non-finite loss.
struct NonFiniteError : Error {
  using Error::Error;
};

}  // namespace hsic_infogan
