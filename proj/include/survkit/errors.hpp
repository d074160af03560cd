#pragma once

#include <stdexcept>
#include <string>

namespace survkit {

// Base class for all survkit errors that map to CLI exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input files: bad CSV schema, unreadable file, invalid synth spec.
struct SchemaError : Error {
    using Error::Error;
};

// Bad caller configuration: unknown covariate name, single-group log-rank,
// inconsistent n in model comparison.
struct ConfigError : Error {
    using Error::Error;
};

// Data that is structurally valid but cannot support the requested analysis:
// empty cohort, zero events, constant or collinear design column,
// zero comparable pairs.
struct DegenerateDataError : Error {
    using Error::Error;
};

// Optimizer did not reach the convergence criteria, diverged (separation),
// or hit a singular Hessian mid-fit.
struct NotConvergedError : Error {
    using Error::Error;
};

// Scoring: model file and patient file disagree on covariates.
struct ModelMismatchError : Error {
    using Error::Error;
};

}  // namespace survkit
