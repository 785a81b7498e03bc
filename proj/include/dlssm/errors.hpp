#pragma once

#include <stdexcept>
#include <string>

namespace dlssm {

/// Bad or inconsistent run configuration (unknown key, invalid combination).
/// CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or incompatible data file. CLI exit code 3.
struct DataFormatError : std::runtime_error {
  explicit DataFormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric failure (overflow in discretization, NaN gradient). CLI exit code 4.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Operation not supported for the requested variant/mode combination
/// (e.g. bidirectional + sequential).
struct UnsupportedModeError : std::runtime_error {
  explicit UnsupportedModeError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dlssm
