#pragma once

#include <stdexcept>
#include <string>

namespace asen {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value, unknown feature name, bad shape range.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input file does not match the declared column schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Dataset content violates an invariant (empty set, unknown label, too few samples).
class DataError : public Error {
public:
    using Error::Error;
};

/// Shape or dimension mismatch between a model and its input.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Non-finite value encountered in a numeric kernel.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A denominator vanished in a ratio index.
class DegenerateDenominator : public NumericError {
public:
    using NumericError::NumericError;
};

/// Training produced a non-finite loss.
class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& what, int epoch) : NumericError(what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

} // namespace asen
