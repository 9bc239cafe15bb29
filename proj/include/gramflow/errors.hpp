#pragma once

#include <stdexcept>
#include <string>

namespace gramflow {

// Caller handed us something that violates a documented precondition
// (dimension mismatch, invalid dataset, unsupported derivative order, ...).
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical routine could not deliver its contract (singular system,
// eigensolver non-convergence, non-finite values).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Config parsing / schema violations; carries enough text to name the
// offending key and line.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gramflow
