#pragma once

#include <stdexcept>
#include <string>

namespace mavact {

// Precondition violations use std::invalid_argument directly. The types below
// cover the remaining failure classes the CLI maps to exit codes.

/// File missing, unreadable or unwritable.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration value; `key()` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// A split that cannot be stratified as requested.
class StratificationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// NaN/Inf reached a place where it must not propagate silently.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The MAC counter met a layer kind it has no cost model for.
class UnsupportedLayerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested compute device is not present.
class EnvironmentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mavact
