#pragma once

#include <stdexcept>
#include <string>

namespace purechat {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes do not line up for an op.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An op produced NaN/Inf, or training diverged.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A caller violated an operation precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Bad run configuration (rates, counts, enum values).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed dataset / checkpoint files.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace purechat
