#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kdmdp {

/// Precondition violation on an argument (point outside the cube, negative
/// scale, empty rectangle, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure inside a numerical routine: LP iteration limit, infeasible witness
/// point, non-finite intermediate.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what, std::ptrdiff_t index = -1)
        : std::runtime_error(what), index_(index) {}

    /// Index of the offending function when the failure happened while
    /// pruning, -1 otherwise.
    std::ptrdiff_t index() const noexcept { return index_; }

private:
    std::ptrdiff_t index_;
};

/// The model cannot be solved or simulated as given.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input document.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A configured memory or time cap was hit.
class ResourceCapError : public std::runtime_error {
public:
    enum class Kind { memory, time };

    ResourceCapError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

} // namespace kdmdp
