#pragma once

#include <stdexcept>
#include <string>

namespace aoi {

// Base for every domain failure. token() is the short machine-readable form
// written into result tables.
class Error : public std::runtime_error {
public:
    Error(std::string token, const std::string& what)
        : std::runtime_error(what), token_(std::move(token)) {}
    const std::string& token() const { return token_; }

private:
    std::string token_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error("invalid", what) {}
};

// rho >= 1 for a single-server FCFS queue.
class StabilityError : public Error {
public:
    explicit StabilityError(const std::string& what) : Error("unstable", what) {}
};

// P(S <= X) = 0 in the preemptive LCFS queue.
class AllPreemptedError : public Error {
public:
    explicit AllPreemptedError(const std::string& what) : Error("all_preempted", what) {}
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error("not_converged", what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

class NoDeliveriesError : public Error {
public:
    explicit NoDeliveriesError(const std::string& what) : Error("no_deliveries", what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

}  // namespace aoi
