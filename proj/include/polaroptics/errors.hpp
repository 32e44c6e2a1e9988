// errors.hpp - Exception types shared by all modules

#pragma once

#include <stdexcept>
#include <string>

namespace polaroptics {

// Argument outside the mathematical domain of an operation (negative energy,
// non-Hermitian Hamiltonian, interpolation outside a table, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A numerical procedure did not reach its tolerance.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A time trace was cut off before it decayed. Carries |M(T)| relative to |M(0)|.
class TruncationError : public NumericError {
public:
    TruncationError(const std::string& what, double tail)
        : NumericError(what), tail_(tail) {}
    double tail() const noexcept { return tail_; }

private:
    double tail_;
};

// Malformed or inconsistent input data (CSV files, measured curves).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid run configuration (unknown keys, wrong units, bad ranges).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace polaroptics
