#pragma once

#include <stdexcept>
#include <string>

namespace nav {

// Bad input files, bad specs, bad configuration. CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure at runtime: quaternion norm outside the correction domain,
// collapsed innovation variance, polar singularity. CLI maps this to exit code 3.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nav
