#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vano {

// Shape or size disagreement between operands.
struct DimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration value (negative counts, unknown keys, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Violated call contract (e.g. backward on a non-scalar loss).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed file content; carries the byte offset where parsing failed.
struct FormatError : std::runtime_error {
    size_t offset = 0;
    FormatError(const std::string& what, size_t at)
        : std::runtime_error(what + " (byte offset " + std::to_string(at) + ")"), offset(at) {}
};

// Non-finite values where finite ones are required.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite or otherwise unusable input data.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation not defined for the given object (e.g. covariance of a nonlinear decoder).
struct UnsupportedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace vano
