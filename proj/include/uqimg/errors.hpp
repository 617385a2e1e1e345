#pragma once

#include <stdexcept>
#include <string>

namespace uqimg {

// Raised when a configuration file or CLI argument is malformed (exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a required input artifact is absent (exit code 3).
struct MissingInputError : std::runtime_error {
    explicit MissingInputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a numeric invariant is violated past its floor (exit code 4).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace uqimg
