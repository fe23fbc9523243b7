#pragma once

#include <stdexcept>
#include <string>

namespace qkernel {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value (qubit ceiling, grid, repetition count, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Invalid call argument: index out of range, size mismatch, wrong kind.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Feature value outside the [-1, +1] domain of the feature map.
class DomainError : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

/// Problems with input data. Subclasses narrow down the cause.
class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

class ParseError : public DataError {
public:
    using DataError::DataError;
};

class SchemaError : public DataError {
public:
    using DataError::DataError;
};

/// Data without the structure an operation needs (one class, zero variance, constant column).
class DegenerateDataError : public DataError {
public:
    using DataError::DataError;
};

/// A cross-validation fold ended up with a single class.
class StratificationError : public DataError {
public:
    using DataError::DataError;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class CalibrationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace qkernel
