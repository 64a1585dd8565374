#pragma once

#include <stdexcept>
#include <string>

namespace hjbvd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (e.g. a non-positive discount).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A stencil weight became negative, so the scheme would lose monotonicity.
class MonotonicityError : public Error {
public:
    MonotonicityError(const std::string& what, std::size_t node, std::size_t control)
        : Error(what), node_(node), control_(control) {}

    std::size_t node() const noexcept { return node_; }
    std::size_t control() const noexcept { return control_; }

private:
    std::size_t node_;
    std::size_t control_;
};

/// An iterative solver hit its iteration cap.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : Error(what), last_residual_(last_residual) {}

    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

/// Linear solve or LP failure.
class SolverError : public Error {
public:
    using Error::Error;
};

/// No sampled control is expensive enough for the requested mass shift.
class CoercivityError : public Error {
public:
    using Error::Error;
};

/// Malformed problem configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Critical-value routes disagree beyond tolerance.
class RouteDisagreement : public Error {
public:
    using Error::Error;
};

}  // namespace hjbvd
