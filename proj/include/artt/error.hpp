#pragma once

#include <stdexcept>
#include <string>

namespace artt {

// Error categories surface as distinct exit codes in the CLI.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent configuration: bad ranges, mismatched rates, unknown keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or out-of-contract input data.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Unreadable or corrupt file (WAV, manifest, checkpoint).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure at run time (non-finite values, degenerate filters).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// API misuse such as replaying a stale activation tape.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace artt
