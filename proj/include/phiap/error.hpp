#pragma once

#include <stdexcept>
#include <string>

namespace phiap {

/// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CLI exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Bad arguments or configuration (CLI exit code 1).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Dimension or stratum mismatch between parameters and data.
class DimensionError : public Error {
 public:
  using Error::Error;
};

}  // namespace phiap
