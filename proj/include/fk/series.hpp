#pragma once

// The series decomposition of the path integral: the Gaussian transition
// density f_{k+1}, the L1 norm of the time-smeared weight g_{k+1}, the
// product integrand h_{k+1}, and a deterministic quadrature reference for
// a single series term.

#include "fk/model.hpp"

#include <span>

namespace fk {

struct TermIndex {
    int k = 0;  // term integrates over (k+1)*d spatial dimensions
};

// Product of Gaussian transition kernels with variances
// t_1, t_2 - t_1, ..., t - t_k evaluated at the chain z_1, ..., z_{k+1}
// (z_0 = 0). times has k entries, points has (k+1)*d entries.
// Throws DegenerateTimePartition for coincident times.
double eval_transition_density(std::span<const double> times,
                               std::span<const double> points,
                               double t, int d);

// ||g_{k+1}||_L1 = t^k / k!
double g_l1_norm(int k, double t);

// v(z_{k+1}) * prod_{i<=k} V(z_i); points has (k+1)*d entries.
// Throws InvalidInputFunction on non-finite values.
double product_h(const ScalarField& v, const ScalarField& V,
                 std::span<const double> points, int k, int d);

struct QuadSpec {
    int n_time = 8;    // Gauss-Legendre points per time dimension
    int n_space = 12;  // Gauss-Hermite points per space dimension
};

struct TermValue {
    double value = 0.0;
    double error_estimate = 0.0;
};

// Deterministic tensor-quadrature value of the k-th series term
// S_{k+1}(v, V) for the (origin-shifted) spec. Time simplex via a Duffy
// map with Gauss-Legendre, space via Gauss-Hermite on the increment chain.
// Enforces (k+1)*d <= 6; throws OracleDimensionLimit beyond that.
TermValue term_reference_value(int k, const ProblemSpec& spec, const QuadSpec& quad = {});

} // namespace fk
