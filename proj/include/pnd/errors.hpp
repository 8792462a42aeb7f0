#pragma once

#include <stdexcept>
#include <string>

namespace pnd {

// Exit-code mapping used by the CLI: config/input problems are exit 2,
// everything else that throws is exit 1.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad arguments to a library call (shape mismatch, index out of range, ...).
struct InputError : Error {
    using Error::Error;
};

// Invalid experiment configuration (missing keys, out-of-range values).
struct ConfigError : Error {
    using Error::Error;
};

// Dataset files missing, malformed, or inconsistent with their manifest.
struct LoadError : Error {
    using Error::Error;
};

// Iterative solver failed to converge or values went non-finite.
struct NumericError : Error {
    using Error::Error;
};

// A requested synthetic graph is infeasible for the given parameters.
struct ConstructionError : Error {
    using Error::Error;
};

}  // namespace pnd
