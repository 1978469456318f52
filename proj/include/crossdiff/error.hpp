#pragma once

#include <stdexcept>
#include <string>

namespace crossdiff {

enum class ErrorKind { invalid_input, non_convergence, rho_too_small, config, io, invariant_violation };

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_input: return "invalid input";
        case ErrorKind::non_convergence: return "non-convergence";
        case ErrorKind::rho_too_small: return "rho too small";
        case ErrorKind::config: return "config error";
        case ErrorKind::io: return "I/O error";
        case ErrorKind::invariant_violation: return "invariant violation";
    }
    return "error";
}

/// Stable snake_case identifier for logs and scripts.
inline const char* tag(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_input: return "invalid_input";
        case ErrorKind::non_convergence: return "non_convergence";
        case ErrorKind::rho_too_small: return "rho_too_small";
        case ErrorKind::config: return "config";
        case ErrorKind::io: return "io";
        case ErrorKind::invariant_violation: return "invariant_violation";
    }
    return "error";
}

/// Base of every exception thrown by the library; carries a category so
/// front ends can map failures onto exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& what) : Error(ErrorKind::invalid_input, what) {}
};

class NonConvergence : public Error {
public:
    explicit NonConvergence(const std::string& what) : Error(ErrorKind::non_convergence, what) {}
};

class RhoTooSmall : public Error {
public:
    explicit RhoTooSmall(const std::string& what) : Error(ErrorKind::rho_too_small, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

}  // namespace crossdiff
