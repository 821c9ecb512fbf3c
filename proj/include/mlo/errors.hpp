#pragma once

#include <stdexcept>
#include <string>

namespace mlo {

// Malformed inputs, broken invariants, bad arguments. CLI maps this to exit 2.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem and stream failures. CLI maps this to exit 1.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical self-check failures. CLI maps this to exit 3.
struct CheckError : std::runtime_error {
    explicit CheckError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mlo
