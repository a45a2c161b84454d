#pragma once

// Sparse (Smolyak) uniform approximation of h_{k+1} over R^{(k+1)d} in
// hierarchical-surplus form, built from nested dyadic 1D interpolation
// levels with weighted cardinal bases, plus precomputation of the
// control-variate integrals I_{k+1}(zeta_i).
//
// Level scheme (1D): level 0 is the single node {0}; level l >= 1 has 2^l
// cells of width 2L/2^l and r*2^l + 1 equispaced nodes on [-L, L]. Grids
// are nested, so the sparse construction stores one surplus per new node.
//
// The level budget q is chosen empirically: start small and add shells
// |l|_1 = q+1 until the measured probe error meets the contract
// eps * beta1 * beta2^k (with margin), capped by a class-based a-priori
// bound plus a small allowance. This certifies the error by measurement
// rather than by unknown constants.

#include "fk/model.hpp"
#include "fk/rng.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fk {

using TensorField = std::function<double(std::span<const double>)>;

struct Level1DOperator {
    int level = 0;
    int degree_r = 1;
    double L = 4.0;
    FunctionClassTag tag;
    std::vector<double> nodes;
    double error_bound = 2.0;  // unit-ball sup bound, shape C * 2^{-r*level}

    int n_cells() const { return level == 0 ? 0 : 1 << level; }
    double cell_width() const { return level == 0 ? 2.0 * L : 2.0 * L / n_cells(); }
    // Weighted cardinal basis: basis(j, nodes[i]) = delta_ij.
    double basis(int j, double x) const;
};

Level1DOperator build_1d_operator(int level, const FunctionClassTag& tag,
                                  const ClassParams& params);

struct BuildOptions {
    int probe_count = 1500;
    std::size_t node_budget = 1500000;   // stored surplus entries
    int max_extra_levels = 2;            // allowance past the class cap
    int max_level_1d = 14;
    double target_margin = 0.6;          // build until probe err <= margin * target
    double prune_tol_frac = 0.005;       // of the absolute target; 0 disables
};

struct SurplusTerm {
    std::vector<int> levels;        // (k+1)*d per-dimension levels
    std::vector<int> strides;
    std::vector<double> surplus;    // one per new-node tuple (odometer order)
    double probe_max = 0.0;         // max |contribution| seen on the probe set
};

class SparseApprox {
public:
    double eps = 0.0;        // unit-norm accuracy target
    int k = 0;
    int d = 1;
    int r = 1;
    int q = -1;              // final level budget (-1 for the zero algorithm)
    FunctionClassTag tag;
    double beta_scale = 1.0; // beta1 * beta2^k at build time
    bool zero = false;       // zero algorithm: no nodes, evaluates to 0
    bool certified = false;  // probe error met the margin at final q
    double probe_error = 0.0;
    double prune_error = 0.0;
    std::size_t n_nodes = 0;    // distinct h evaluations consumed by the build
    std::size_t n_entries = 0;  // stored surplus entries

    std::vector<SurplusTerm> terms;

    // Flat views aligned with entry order: node coordinates, surplus
    // coefficients, and the precomputed weights I_{k+1}(zeta_i).
    std::vector<double> node_tuples;     // n_entries * (k+1)*d
    std::vector<double> coefficients;
    std::vector<double> cv_weights;
    bool cv_filled = false;
    double cv_precision = 0.0;
    std::uint64_t cv_samples = 0;
    double cv_aggregate_stderr = 0.0;

    double eval(std::span<const double> points) const;

    // Deterministic conservative bound on the precompute error of
    // sum_i coefficients_i * cv_weights_i (independent of cache state).
    double cv_error_bound() const;

    // Contribution of the precomputed part: sum_i coefficients_i * cv_weights_i.
    double cv_integral() const;

    std::string cache_key(double t) const;
};

// Builds the approximant for h: R^{(k+1)d} -> R with unit-norm target eps.
// Throws SparseGridBudgetExceeded when the entry budget is exhausted.
SparseApprox build_sparse(const TensorField& h, double eps, int k, int d,
                          const FunctionClassTag& tag, const ClassParams& params,
                          const BuildOptions& opts = {});

double eval_sparse(const SparseApprox& approx, std::span<const double> points);

// Measured sup of |h - U h| over a fresh deterministic probe set.
double measure_sup_error(const SparseApprox& approx, const TensorField& h,
                         int probe_count, std::uint64_t salt = 1);

struct PrecomputeOptions {
    double precision = 0.0;        // per-weight stderr target; 0 = auto
    std::string cache_dir;         // empty = no disk cache
    std::uint64_t max_samples = 1u << 22;
};

struct PrecomputeStats {
    std::uint64_t samples_used = 0;  // 0 on cache hit
    bool cache_hit = false;
    bool cache_corrupt = false;      // a corrupt file was replaced
    bool precision_met = true;
};

// Fills approx.cv_weights with Monte Carlo estimates of I_{k+1}(zeta_i)
// sharing one deterministic sample set, doubling it until each weight's
// standard error is below the precision target (or the sample cap).
// Results are cached to disk keyed by (class, eps, k, t, d, level structure).
PrecomputeStats precompute_cv_weights(SparseApprox& approx, double t,
                                      const PrecomputeOptions& opts = {});

} // namespace fk
