#pragma once

#include <stdexcept>
#include <string>

namespace chaoslab {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A structural precondition was violated (invalid exponents, negative
/// time step, horizon not a multiple of dt, ...).  The message names the
/// violated rule and the offending value.
class ConstraintError : public Error {
public:
    using Error::Error;
};

/// An operation was applied to data it cannot work on (mismatched grids,
/// missing increments, too few sweep windows, ...).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Adaptive numerics failed to converge.  Carries the last two estimates
/// so callers can judge how bad the disagreement is.
class NumericalError : public Error {
public:
    NumericalError(const std::string& msg, double last, double previous)
        : Error(msg), last_estimate(last), previous_estimate(previous) {}
    double last_estimate;
    double previous_estimate;
};

/// A particle trajectory left the representable range (NaN/Inf position).
class BlowUpError : public Error {
public:
    BlowUpError(const std::string& msg, long particle, double time)
        : Error(msg), particle(particle), time(time) {}
    long particle;
    double time;
};

/// Monte Carlo estimation became meaningless (e.g. every path diverged).
class EstimationError : public Error {
public:
    using Error::Error;
};

/// Config file could not be parsed or validated.  line == 0 means the
/// problem is not tied to a single line; column == 0 means the problem is
/// not tied to a single column.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg, int line = 0, int column = 0)
        : Error(msg), line(line), column(column) {}
    int line;
    int column;
};

} // namespace chaoslab
