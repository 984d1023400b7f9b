#pragma once

#include <stdexcept>
#include <string>

namespace qcconf {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Result not representable in double precision (e.g. lambda near a cusp).
class OverflowError : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

// Iterative procedure failed to converge.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double factor)
        : std::runtime_error(what), factor_(factor) {}
    double factor() const noexcept { return factor_; }

private:
    double factor_;
};

}  // namespace qcconf
