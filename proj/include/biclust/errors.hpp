#pragma once

#include <stdexcept>
#include <string>

namespace biclust {

/// Base class of everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid inputs, violated preconditions, malformed configuration.
struct ValidationError : Error {
    using Error::Error;
};

struct EmptyClusterError : ValidationError {
    using ValidationError::ValidationError;
};

struct DegenerateCentersError : ValidationError {
    using ValidationError::ValidationError;
};

struct DimensionMismatchError : ValidationError {
    using ValidationError::ValidationError;
};

struct InvalidProbabilityError : ValidationError {
    using ValidationError::ValidationError;
};

/// All degrees are zero; the order-statistic threshold is undefined.
struct ZeroGraphError : ValidationError {
    using ValidationError::ValidationError;
};

/// Caller passed inputs whose pairwise row distances differ (isometry checks).
struct DistanceMismatchError : ValidationError {
    using ValidationError::ValidationError;
};

/// An iterative numeric routine did not reach its tolerance.
struct NoConvergenceError : Error {
    using Error::Error;
};

/// Malformed file content (reported with line numbers where possible).
struct ParseError : ValidationError {
    using ValidationError::ValidationError;
};

/// Filesystem-level failures: missing files, unwritable paths.
struct IoError : Error {
    using Error::Error;
};

}  // namespace biclust
