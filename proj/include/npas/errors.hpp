#pragma once

#include <stdexcept>
#include <string>

namespace npas {

// Error taxonomy mirrored by the C API status codes and CLI exit codes:
// config/validation -> 2, numeric/divergence -> 3, I/O -> 4.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Contract violations (bad scheme/tensor pairing, shape mismatch, ...).
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

}  // namespace npas
