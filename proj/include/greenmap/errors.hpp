#pragma once

#include "greenmap/point.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace greenmap {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid settings, malformed inputs, counts below minimum.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A point lies outside the domain or too close to its boundary.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Evaluation requested inside the pole collar.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Degenerate boundary parametrization (zero speed tangent).
class ParametrizationError : public Error {
public:
    using Error::Error;
};

/// Requested flow level or patch outside the admissible range.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Degenerate matrix input for a metric diagnostic.
class DegeneracyError : public Error {
public:
    using Error::Error;
};

/// Malformed or unreadable input file; the message carries the location.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Matrix argument of the wrong shape or not symmetric.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Error carrying the location where it was detected.
class LocatedError : public Error {
public:
    LocatedError(const std::string& what, Point where) : Error(what), where_(where) {}
    const Point& where() const { return where_; }

private:
    Point where_;
};

/// The boundary fit did not reach the tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual) : Error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

/// |grad G| vanished (numerically) on a trajectory.
class CriticalPointError : public LocatedError {
public:
    using LocatedError::LocatedError;
};

/// Step-size underflow or step budget exhausted while integrating.
class StiffnessError : public LocatedError {
public:
    using LocatedError::LocatedError;
};

/// A flow curve does not appear to have finite weighted length.
class FiniteLengthError : public LocatedError {
public:
    using LocatedError::LocatedError;
};

/// A map evaluation failed while probing a finite-difference stencil.
class ProbeError : public LocatedError {
public:
    using LocatedError::LocatedError;
};

} // namespace greenmap
