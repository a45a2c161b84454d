#pragma once

// Simulated quantum mean estimation with randomized queries. The quantum
// computer is simulated by sampling measurement outcomes from the exact
// phase-estimation distribution, which is all the error model depends on.
//
// Bounded real means are reduced to Boolean means by fixed-point encoding:
// each sample value is mapped affinely into [0, 1], quantized to value_bits
// bits, and each bit plane's Boolean mean is estimated by amplitude
// estimation with a proportional share of the query budget, then the planes
// are recombined.

#include "fk/estimators.hpp"
#include "fk/rng.hpp"
#include "fk/sampler.hpp"
#include "fk/smolyak.hpp"

#include <cstdint>
#include <vector>

namespace fk {

struct QueryModel {
    int kappa = 64;       // randomized quantum queries per estimation
    int grid_bits = 0;    // force M = 2^grid_bits for every plane; 0 = auto
    int value_bits = 10;  // fixed-point bits of the beta encoding (>= 2)
    int repeats = 5;      // median amplification count (odd)
};

struct AEOutcome {
    int j = 0;                       // measured grid index
    double amplitude_estimate = 0.0; // sin^2(pi j / M)
    std::uint64_t queries_used = 0;
};

// Exact outcome probabilities of amplitude estimation on amplitude a with a
// grid of size M (power of two). Sums to 1 within 1e-12.
std::vector<double> ae_outcome_distribution(double a, int M);

// Samples the distribution `repeats` times and returns the outcome whose
// decoded amplitude is the median.
AEOutcome ae_estimate(double a, int M, int repeats, RngSequence& seq);

// Fixed-point encoding of y in [0, 1] to {0 .. 2^bits - 2} and back;
// the even denominator makes 1/2 exactly representable.
int encode_fixed_point(double y, int bits);
double decode_fixed_point(int code, int bits);

// Estimates (1/m) sum f(sample_j) for |f| <= bound_b on every sample
// (violation throws QuantumRangeError). queries = kappa * repeats exactly;
// the m classical evaluations that define the simulated oracle are reported
// as sim_evals, not as algorithmic cost.
TermEstimate q_quant_mean(const PathIntegrand& f, const std::vector<PathSample>& samples,
                          const QueryModel& model, double bound_b, RngStream stream);

// Per-term quantum estimator: precomputed integral of the approximant plus
// (t^k/k!) times the quantum mean of the residual over m = kappa^2
// randomized sample points.
TermEstimate phi_quant(const ProblemSpec& spec, double eps_term, int kappa, int k,
                       const SparseApprox& approx, RngStream stream,
                       const QueryModel& base_model = {});

} // namespace fk
