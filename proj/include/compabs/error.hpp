#pragma once

#include <stdexcept>
#include <string>

namespace compabs {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shapes of matrices/vectors do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

// A value is outside its admissible range (kappa_hat outside (0,1), M < 1, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// The operation is not defined for this kind of model.
class UnsupportedModel : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Binary artifact cannot be read: bad magic, version, checksum or truncation.
class FormatError : public Error {
public:
    using Error::Error;
};

class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

class ChecksumError : public FormatError {
public:
    using FormatError::FormatError;
};

class DegenerateNoise : public Error {
public:
    using Error::Error;
};

class BudgetExceeded : public Error {
public:
    using Error::Error;
};

}  // namespace compabs
