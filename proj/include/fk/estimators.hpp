#pragma once

// Classical Monte Carlo against the normalized g-density and the
// variance-reduced per-term randomized estimator: precomputed integral of
// the sparse approximant plus a Monte Carlo mean of the small residual.

#include "fk/model.hpp"
#include "fk/sampler.hpp"
#include "fk/smolyak.hpp"

#include <functional>
#include <limits>

namespace fk {

using PathIntegrand = std::function<double(const PathSample&)>;

struct TermEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t n_evals = 0;   // classical integrand evaluations
    int k = 0;
    std::uint64_t queries = 0;   // quantum queries (zero for classical paths)
    std::uint64_t sim_evals = 0; // classical evals used only to simulate queries
};

// Unbiased estimate of I_{k+1}(f): (t^k/k!) times the sample mean of f over
// m draws from the normalized g-density. std_error uses the unbiased sample
// variance; for m = 1 it is reported as +infinity.
TermEstimate mc_mean(const PathIntegrand& f, int k, double t, int d, std::size_t m,
                     RngStream stream);

// Residual integrand h - U h for a problem spec (assumed origin-shifted).
PathIntegrand make_residual(const ProblemSpec& spec, const SparseApprox& approx);

// Integrand h itself.
PathIntegrand make_h_integrand(const ProblemSpec& spec, int k);

// Variance-reduced estimator: sum_i coefficients_i cv_weights_i plus the
// Monte Carlo mean of the residual over m samples. Requires cv weights.
TermEstimate phi_rand(const ProblemSpec& spec, double /*eps_term*/, std::size_t m, int k,
                      const SparseApprox& approx, RngStream stream);

// Var(h) / Var(h - U h) from m paired samples; returns +infinity when the
// residual variance vanishes.
double empirical_variance_ratio(const ProblemSpec& spec, int k,
                                const SparseApprox& approx, std::size_t m,
                                RngStream stream);

} // namespace fk
