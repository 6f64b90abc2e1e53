#pragma once

#include <stdexcept>
#include <string>

namespace eqnet {

// Base for every error raised by the library. Each subtype maps onto one
// failure class so callers (and the CLI exit codes) can branch on it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes of operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input data violates a documented precondition (bad index, k > N, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// An experiment/model configuration value is missing or invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An API was called in a state its contract forbids.
class ContractError : public Error {
 public:
  using Error::Error;
};

// A file does not follow its on-disk format.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Synthetic data generation could not satisfy its constraints.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// The finite-difference oracle cannot be trusted (non-deterministic f).
class OracleInvalidError : public Error {
 public:
  using Error::Error;
};

// Training diverged (NaN/Inf loss).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace eqnet
