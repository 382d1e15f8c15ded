#ifndef HOMLAB_ERRORS_HPP
#define HOMLAB_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace homlab {

/// Base class for all homlab exceptions.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad user input: config keys, out-of-sector shifts, resolution-rule
/// violations. Messages are path-qualified where a config file is involved.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Iterative solver did not reach the requested residual. Carries the full
/// residual history so callers can diagnose stagnation vs divergence.
class SolverFailure : public Error {
public:
    SolverFailure(const std::string& what, std::vector<double> history)
        : Error(what), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

/// Internal consistency check failed (e.g. homogenized tensor asymmetric
/// beyond tolerance, which signals a broken corrector solve upstream).
class InconsistencyError : public Error {
public:
    explicit InconsistencyError(const std::string& what) : Error(what) {}
};

} // namespace homlab

#endif
