#pragma once

#include <stdexcept>
#include <string>

namespace coaleps {

/// Invalid user input: malformed config files, bad flag combinations,
/// structurally invalid specs. CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative procedure failed to reach its tolerance (backward products
/// that never contract, power iteration on a periodic matrix). CLI exit code 3.
class ConvergenceError : public std::runtime_error {
public:
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// A resource guard was violated (stacked state space too large). CLI exit code 4.
class GuardError : public std::runtime_error {
public:
    explicit GuardError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace coaleps
