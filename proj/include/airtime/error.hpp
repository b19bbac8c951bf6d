#ifndef AIRTIME_ERROR_HPP
#define AIRTIME_ERROR_HPP

#include <stdexcept>
#include <string>

namespace airtime {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input that could not be parsed at all (bad JSON, bad binary).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Input parsed but violates the documented schema (wrong counts, ranges).
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Skater tracking could not be started or continued.
class TrackingError : public Error {
public:
    using Error::Error;
};

/// Flight span list violates the span invariants.
class SpanError : public Error {
public:
    using Error::Error;
};

/// Tensor shapes do not conform for an operation.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid or infeasible configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Valid schema but unusable content (length mismatch, degenerate pose, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// API misuse by the caller (e.g. backward on a non-scalar).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Checkpoint file is corrupt, truncated, or has an unsupported version.
class CheckpointError : public Error {
public:
    using Error::Error;
};

} // namespace airtime

#endif
