#pragma once

#include <stdexcept>
#include <string>

namespace unseennet {

// Bad inputs, malformed files, contract violations. CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failures at run time (missing artifacts, I/O). CLI exit code 3.
class RuntimeError : public std::runtime_error {
public:
    explicit RuntimeError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace unseennet
