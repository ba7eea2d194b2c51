#ifndef UDN_ERRORS_HPP
#define UDN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace udn {

/// No UE-to-AN assignment can satisfy the cardinality/load limits.
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

/// Exhaustive enumeration was requested above the configured cap.
class InstanceTooLargeError : public std::runtime_error {
public:
    explicit InstanceTooLargeError(const std::string& what) : std::runtime_error(what) {}
};

/// A local channel matrix is numerically rank-deficient; zero-forcing is undefined.
class RankDeficientLocalChannelError : public std::runtime_error {
public:
    explicit RankDeficientLocalChannelError(const std::string& what) : std::runtime_error(what) {}
};

/// The initial upper bisection bound was found feasible; the caller must widen it.
class BracketError : public std::runtime_error {
public:
    explicit BracketError(const std::string& what) : std::runtime_error(what) {}
};

/// The cone solver failed to converge. Kept distinct from infeasibility.
class SolverNumericalFailure : public std::runtime_error {
public:
    explicit SolverNumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Bad user input (config file, CLI arguments, violated type invariants).
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

} // namespace udn

#endif
