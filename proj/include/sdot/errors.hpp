#pragma once

#include <stdexcept>
#include <string>

namespace sdot {

/// Malformed or inconsistent input (bad polygon, duplicate sites, mass mismatch, ...).
class InvalidInputError : public std::runtime_error {
public:
    explicit InvalidInputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A height vector outside the admissible set H (some cell is empty) was passed
/// to an operation that requires all cells nonempty.
class NotAdmissibleError : public std::runtime_error {
public:
    explicit NotAdmissibleError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Query point lies outside the source domain.
class OutOfDomainError : public std::runtime_error {
public:
    explicit OutOfDomainError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Gradient requested at a point where the potential is not differentiable
/// (on or too close to a cell boundary).
class UndefinedGradientError : public std::runtime_error {
public:
    explicit UndefinedGradientError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Operation requires a solved model.
class InvalidStateError : public std::runtime_error {
public:
    explicit InvalidStateError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Solver hit its iteration budget without reaching tolerance.
class MaxIterationsError : public std::runtime_error {
public:
    explicit MaxIterationsError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace sdot
