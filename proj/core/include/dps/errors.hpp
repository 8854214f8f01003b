#pragma once

#include <stdexcept>
#include <string>

namespace dps {

/// Invalid configuration value (bad schedule bounds, negative sigma, unknown
/// config key, ...). Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape or length mismatch between tensors/vectors.
class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite input or a numerically impossible operation (singular covariance).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested capability is not available on this object (e.g. range-space
/// projection on an operator whose A A^T is not invertible).
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A sampling chain produced a non-finite iterate. Carries the timestep.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, int timestep)
        : std::runtime_error(what), timestep_(timestep) {}
    int timestep() const { return timestep_; }

private:
    int timestep_;
};

}  // namespace dps
