#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace recurflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A path was asked for values outside the interval it can supply.
class CoverageError : public Error {
public:
    CoverageError(double need_lo, double need_hi, double have_lo, double have_hi);

    double missing_lo() const { return missing_lo_; }
    double missing_hi() const { return missing_hi_; }

private:
    double missing_lo_;
    double missing_hi_;
};

/// Bad arguments to an operation (empty ladders, mismatched grids, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside the Navier-Stokes solver.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double time);
    double time() const { return time_; }

private:
    double time_;
};

/// Config validation failure; carries every problem found, not just the first.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

}  // namespace recurflow
