#ifndef FIBCAST_COMMON_HPP
#define FIBCAST_COMMON_HPP

#include <stdexcept>
#include <string>

namespace fibcast {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Problems caused by user-supplied data or configuration. The CLI maps
// these to exit code 2; everything else exits 1.
class InputError : public Error {
public:
    using Error::Error;
};

// Bad run file, schema, or option value.
class ConfigError : public InputError {
public:
    using InputError::InputError;
};

// Missing or misnamed column in an input table.
class SchemaError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Invalid rows, coverage gaps, unusable input data.
class DataError : public InputError {
public:
    using InputError::InputError;
};

// Query outside a series' covered time span.
class OutOfRangeError : public DataError {
public:
    using DataError::DataError;
};

// Unreadable, truncated, or wrong-version model file.
class ModelFormatError : public InputError {
public:
    using InputError::InputError;
};

// Argument outside an operation's mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

// Dimension or row/column count mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Pipeline steps invoked in an invalid order (e.g. double standardization).
class PipelineError : public Error {
public:
    using Error::Error;
};

// A transformer or model touched rows reserved for evaluation.
class LeakageError : public Error {
public:
    using Error::Error;
};

// An iterative solver failed to reach its stopping criterion.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

} // namespace fibcast

#endif
