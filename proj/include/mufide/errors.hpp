#pragma once

#include <stdexcept>
#include <string>

namespace mufide {

// Base class for all library errors. The CLI maps subtrees of this hierarchy
// to exit codes: data errors -> 3, numerical errors -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (CSV parse failures, shape mismatches,
// empty sets where content is required).
struct DataError : Error {
  using Error::Error;
};

struct DimensionMismatch : DataError {
  using DataError::DataError;
};

struct ParseError : DataError {
  using DataError::DataError;
};

struct EmptyData : DataError {
  using DataError::DataError;
};

// Numerical failures: factorization breakdown, diverged training, exhausted
// optimizers.
struct NumericalError : Error {
  using Error::Error;
};

struct NotPositiveDefinite : NumericalError {
  using NumericalError::NumericalError;
};

struct DivergedTraining : NumericalError {
  using NumericalError::NumericalError;
};

struct AllTrialsFailed : NumericalError {
  using NumericalError::NumericalError;
};

struct OptimizationFailed : NumericalError {
  using NumericalError::NumericalError;
};

struct DomainError : NumericalError {
  using NumericalError::NumericalError;
};

// Evaluation outside a benchmark's declared input box.
struct OutOfDomain : DataError {
  using DataError::DataError;
};

// R^2 requested against a target vector with zero variance.
struct DegenerateTargets : DataError {
  using DataError::DataError;
};

// Evaluation exactly on a benchmark's discontinuity locus.
struct AtDiscontinuity : DataError {
  using DataError::DataError;
};

// Invalid configuration passed by the caller (bad fold plan, empty search
// space, malformed model spec).
struct ConfigError : DataError {
  using DataError::DataError;
};

}  // namespace mufide
