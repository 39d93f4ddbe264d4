#pragma once

#include <stdexcept>
#include <string>

namespace crossgan {

/// Raised when an operation receives arguments that violate its contract
/// (shape mismatch, empty sequence, wrong direction, ...).
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised for invalid or incompatible configuration (architecture, config keys).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a file on disk is malformed, truncated or corrupt.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace crossgan
