#pragma once

// Independent reference solutions for acceptance testing: closed forms for
// registered presets, tensor quadrature as a fallback, and a dense-grid
// Euler simulation of the path integral itself.

#include "fk/model.hpp"

#include <cstdint>

namespace fk {

enum class OracleMethod { closed_form, quadrature, dense_path_mc };

struct OracleResult {
    double value = 0.0;
    OracleMethod method = OracleMethod::closed_form;
    double error_estimate = 0.0;  // 0 for closed forms
    double stat_error = 0.0;      // dense-path: sample std / sqrt(n_paths)
    double disc_error = 0.0;      // dense-path: time-discretization estimate
};

// integral of v against N(0, t I_d). Closed form for recognized presets,
// Gauss-Hermite quadrature otherwise.
OracleResult oracle_v_only(const ScalarField& v, const std::optional<FieldDesc>& desc,
                           int d, double t);

// e^{ct} * oracle_v_only for the constant potential c.
OracleResult oracle_constant_potential(const ScalarField& v,
                                       const std::optional<FieldDesc>& desc,
                                       double c, int d, double t);

// Euler-grid Brownian paths with trapezoid quadrature of the potential
// integral: mean of v(x(t)) exp(int V). The discretization estimate is the
// difference against the same paths evaluated on the half-resolution grid.
OracleResult oracle_dense_path(const ProblemSpec& spec, int n_steps,
                               std::size_t n_paths, std::uint64_t seed);

// Reference S(v, V) for a problem bundle when one is known (closed form or
// dense-path simulation for the harmonic preset). Used by sweeps.
OracleResult reference_solution(const ProblemSpec& spec);

} // namespace fk
