#pragma once

#include <stdexcept>
#include <string>

namespace rotstar {

/// Invalid parameters or inputs (maps to CLI exit code 2).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Newton iteration exhausted its step budget (exit code 3).
class NonConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A state violated a structural invariant: support escape, characteristic
/// fold, non-positive entropy (exit code 4).
class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Newton differences grew for three consecutive steps (exit code 5).
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed, truncated or incompatible solution files (exit code 6).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Warnings are routed through a single sink so that tests and the CLI can
/// silence or capture them.
void warn(const std::string& message);
void set_warnings_enabled(bool enabled);

} // namespace rotstar
