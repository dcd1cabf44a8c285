#pragma once

#include <stdexcept>
#include <string>

namespace pcamix {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A spin value was requested at a site no configuration or boundary covers.
struct MissingSpinError : Error {
    using Error::Error;
};

// Exact-enumeration request exceeds the configured size budget.
struct BudgetError : Error {
    using Error::Error;
};

// Two objects that must live on the same region do not.
struct RegionMismatchError : Error {
    using Error::Error;
};

// A box is too small to contain the dependence cone of the requested horizon.
struct RegionTooSmallError : Error {
    using Error::Error;
};

// The nesting precondition of the Gibbs-consistency check is violated.
struct NestingError : Error {
    using Error::Error;
};

// Invalid experiment configuration or command usage.
struct ConfigError : Error {
    using Error::Error;
};

// Not enough usable data points for a fit.
struct InsufficientDataError : Error {
    using Error::Error;
};

// A monotone coupling produced out-of-order replicas (indicates a bug).
struct OrderViolationError : Error {
    using Error::Error;
};

} // namespace pcamix
