#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace starkqfi {

/// Root of all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument or precondition violation.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Iterative solver ran out of its budget.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, int iterations)
        : Error(what + " (iteration budget " + std::to_string(iterations) + ")"),
          iterations_(iterations) {}
    int iterations() const noexcept { return iterations_; }

private:
    int iterations_;
};

/// Target eigenstate shares its energy with other states.
class DegenerateStateError : public Error {
public:
    DegenerateStateError(const std::string& what, std::vector<long> multiplet)
        : Error(what), multiplet_(std::move(multiplet)) {}
    const std::vector<long>& multiplet() const noexcept { return multiplet_; }

private:
    std::vector<long> multiplet_;
};

/// Selected state changed character between two nearby fields.
class LevelCrossingError : public Error {
public:
    using Error::Error;
};

/// A result that should be non-negative came out clearly negative.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Curve has no interior maximum.
class NoInteriorPeakError : public Error {
public:
    using Error::Error;
};

/// Failure at one grid point of a sweep; carries the field value.
class PointError : public Error {
public:
    PointError(double h, const std::string& what)
        : Error("at h=" + std::to_string(h) + ": " + what), h_(h) {}
    double h() const noexcept { return h_; }

private:
    double h_;
};

/// Configuration problem; maps to exit code 1 in the CLI.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace starkqfi
