#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stergm {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: unknown term, unknown attribute level, malformed file.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Parse failure with the offending line number (1-based).
class ParseError : public ConfigError {
public:
    ParseError(const std::string &source, std::size_t line, const std::string &what)
        : ConfigError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A model feature that an operation cannot handle (e.g. dyad dependence in a closed form).
class UnsupportedModelError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Violated precondition of an operation on otherwise valid data.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Estimate sits on the boundary of the parameter space (an infinite solution).
class BoundaryError : public DomainError {
public:
    using DomainError::DomainError;
};

/// A target statistic that is not defined on the given network (e.g. mean tie age of an empty graph).
class UndefinedTargetError : public Error {
public:
    using Error::Error;
};

/// Linear algebra failure: singular covariance, rank-deficient design.
class NumericalError : public Error {
public:
    using Error::Error;
};

class RankDeficientError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Simulated moments stuck on the edge of the convex hull of the statistic.
class DegeneracyError : public Error {
public:
    DegeneracyError(const std::string &target, const std::string &what)
        : Error(what), target_(target) {}

    const std::string &target() const noexcept { return target_; }

private:
    std::string target_;
};

} // namespace stergm
