#pragma once

#include <stdexcept>
#include <string>

namespace hyperball {

/// Invalid experiment configuration (bad key, bad value, missing file).
/// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite value detected mid-computation. The CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input data (e.g. a corrupt IDX file or edge list).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hyperball
