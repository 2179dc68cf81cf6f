#pragma once

#include <stdexcept>
#include <string>

namespace gpd {

/// Invalid arguments: shape mismatches, out-of-range labels, malformed files.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A factorization failed even after jitter escalation.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Fitting could not produce a usable model (no restart converged, etc.).
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gpd
