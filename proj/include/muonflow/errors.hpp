#pragma once

#include <stdexcept>
#include <string>

namespace muonflow {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidMatrixError : public Error {
public:
    using Error::Error;
};

class OutsideDomainError : public Error {
public:
    using Error::Error;
};

class ShapeMismatchError : public Error {
public:
    using Error::Error;
};

class LengthMismatchError : public Error {
public:
    using Error::Error;
};

class InvalidScalingError : public Error {
public:
    using Error::Error;
};

class NonFiniteStateError : public Error {
public:
    using Error::Error;
};

class TooFewRecordsError : public Error {
public:
    using Error::Error;
};

class NoRetainedSamplesError : public Error {
public:
    using Error::Error;
};

class NonPositiveFieldError : public Error {
public:
    using Error::Error;
};

class InvalidInputError : public Error {
public:
    using Error::Error;
};

class InvalidConfigError : public Error {
public:
    using Error::Error;
};

class InvalidScaleError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class NonPositiveForLogError : public Error {
public:
    using Error::Error;
};

} // namespace muonflow
