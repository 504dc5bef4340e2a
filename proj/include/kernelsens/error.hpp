#pragma once

#include <stdexcept>
#include <string>

namespace kernelsens {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// Malformed IDX / CIFAR-10 input.
class FormatError : public Error {
public:
    using Error::Error;
};

// Not enough samples of a requested class.
class CountError : public Error {
public:
    using Error::Error;
};

class UnfittedModelError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Raised when the jitter ladder is exhausted without a usable factorization.
class SingularKernelError : public Error {
public:
    SingularKernelError(const std::string& what, double lambda_min)
        : Error(what), lambda_min_(lambda_min) {}

    double lambda_min() const noexcept { return lambda_min_; }

private:
    double lambda_min_;
};

}  // namespace kernelsens
