#pragma once

#include <stdexcept>
#include <string>

namespace fk {

// User input function returned NaN/inf at a point.
struct InvalidInputFunction : std::runtime_error {
    explicit InvalidInputFunction(const std::string& what) : std::runtime_error(what) {}
};

// Zero-variance time partition passed to the transition density.
struct DegenerateTimePartition : std::runtime_error {
    explicit DegenerateTimePartition(const std::string& what) : std::runtime_error(what) {}
};

// Quadrature oracle asked for more dimensions than it supports.
struct OracleDimensionLimit : std::runtime_error {
    explicit OracleDimensionLimit(const std::string& what) : std::runtime_error(what) {}
};

// Sparse grid construction exceeded the configured node budget.
struct SparseGridBudgetExceeded : std::runtime_error {
    explicit SparseGridBudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

// Integrand sample out of the declared range for the quantum encoding.
struct QuantumRangeError : std::runtime_error {
    explicit QuantumRangeError(const std::string& what) : std::runtime_error(what) {}
};

// Monte Carlo integrand produced a non-finite value.
struct InvalidIntegrandSample : std::runtime_error {
    explicit InvalidIntegrandSample(const std::string& what) : std::runtime_error(what) {}
};

// Configuration file / CLI argument problem (exit code 2 in the CLI).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace fk
