#pragma once

#include <stdexcept>
#include <string>

namespace carleman {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A weight sequence violates its invariants (non-positive entry, too short, ...).
class InvalidSequenceError : public Error {
public:
    explicit InvalidSequenceError(const std::string& what) : Error(what) {}
};

/// Bump/transition synthesis cannot satisfy the requested certificate.
class SynthesisError : public Error {
public:
    explicit SynthesisError(const std::string& what) : Error(what) {}
};

/// A piecewise-map schedule violates monotonicity or admission rules.
class InvalidScheduleError : public Error {
public:
    explicit InvalidScheduleError(const std::string& what) : Error(what) {}
};

} // namespace carleman
