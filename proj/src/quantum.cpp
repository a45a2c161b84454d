#include "fk/quantum.hpp"

#include "fk/errors.hpp"
#include "fk/series.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace fk {

namespace {

// Fejer (phase-estimation) kernel: probability of measuring j when the true
// phase is phi, on an M-point grid. Exact for integer phase offsets.
double pe_kernel(double phi, int j, int M) {
    double delta = phi - static_cast<double>(j) / M;
    double r = delta - std::nearbyint(delta);
    double s = std::sin(M_PI * r);
    if (std::abs(s) < 1e-300) return 1.0;
    double num = std::sin(M_PI * M * r);
    double q = num / (M * s);
    return q * q;
}

double ae_error_bound(int M) {
    double x = M_PI / M;
    return x + x * x;
}

// kappa_p >= 1 per bit plane, proportional to 2^{-p/2}, summing to kappa.
std::vector<int> allocate_queries(int kappa, int planes) {
    std::vector<int> alloc(planes, 1);
    int used = planes;
    std::vector<double> w(planes);
    for (int p = 0; p < planes; ++p) w[p] = std::pow(2.0, -0.5 * (p + 1));
    while (used < kappa) {
        int best = 0;
        double best_score = -1.0;
        for (int p = 0; p < planes; ++p) {
            double score = w[p] / alloc[p];
            if (score > best_score + 1e-15) {
                best_score = score;
                best = p;
            }
        }
        ++alloc[best];
        ++used;
    }
    return alloc;
}

} // namespace

std::vector<double> ae_outcome_distribution(double a, int M) {
    if (a < 0.0 || a > 1.0)
        throw std::invalid_argument("ae_outcome_distribution: a in [0,1] required");
    if (M < 2 || !std::has_single_bit(static_cast<unsigned>(M)))
        throw std::invalid_argument("ae_outcome_distribution: M must be a power of two >= 2");
    double omega = std::asin(std::sqrt(a)) / M_PI;  // in [0, 1/2]
    std::vector<double> p(M);
    for (int j = 0; j < M; ++j)
        p[j] = 0.5 * pe_kernel(omega, j, M) + 0.5 * pe_kernel(1.0 - omega, j, M);
    return p;
}

AEOutcome ae_estimate(double a, int M, int repeats, RngSequence& seq) {
    std::vector<double> dist = ae_outcome_distribution(a, M);
    std::vector<double> cdf(dist.size());
    double run = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
        run += dist[j];
        cdf[j] = run;
    }
    std::vector<std::pair<double, int>> draws(repeats);
    for (int rep = 0; rep < repeats; ++rep) {
        double u = seq.next_uniform() * run;
        auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        int j = static_cast<int>(it - cdf.begin());
        if (j >= M) j = M - 1;
        double s = std::sin(M_PI * j / M);
        draws[rep] = {s * s, j};
    }
    std::nth_element(draws.begin(), draws.begin() + repeats / 2, draws.end());
    AEOutcome out;
    out.amplitude_estimate = draws[repeats / 2].first;
    out.j = draws[repeats / 2].second;
    out.queries_used = static_cast<std::uint64_t>(M) * repeats;
    return out;
}

int encode_fixed_point(double y, int bits) {
    if (bits < 2) throw std::invalid_argument("encode_fixed_point: bits >= 2 required");
    int scale = (1 << bits) - 2;
    long code = std::lround(y * scale);
    if (code < 0) code = 0;
    if (code > scale) code = scale;
    return static_cast<int>(code);
}

double decode_fixed_point(int code, int bits) {
    int scale = (1 << bits) - 2;
    return static_cast<double>(code) / scale;
}

TermEstimate q_quant_mean(const PathIntegrand& f, const std::vector<PathSample>& samples,
                          const QueryModel& model, double bound_b, RngStream stream) {
    if (samples.empty()) throw std::invalid_argument("q_quant_mean: samples required");
    if (model.kappa < 1) throw std::invalid_argument("q_quant_mean: kappa >= 1 required");
    if (model.repeats < 1 || model.repeats % 2 == 0)
        throw std::invalid_argument("q_quant_mean: repeats must be odd and positive");
    if (model.value_bits < 2)
        throw std::invalid_argument("q_quant_mean: value_bits >= 2 required");
    if (!(bound_b > 0.0)) throw std::invalid_argument("q_quant_mean: bound_b > 0 required");

    const std::size_t m = samples.size();
    std::vector<double> vals(m);
    for (std::size_t i = 0; i < m; ++i) {
        double v = f(samples[i]);
        if (!std::isfinite(v) || std::abs(v) > bound_b) {
            std::ostringstream os;
            os << "quantum encoding range exceeded at sample " << i << ": value " << v
               << " outside [-" << bound_b << ", " << bound_b << "]";
            throw QuantumRangeError(os.str());
        }
        vals[i] = v;
    }

    TermEstimate est;
    est.queries = static_cast<std::uint64_t>(model.kappa) * model.repeats;
    est.sim_evals = m;
    est.n_evals = 0;

    // Degenerate range: the classical preprocessing already knows the
    // constant, no estimation needed.
    auto [mn_it, mx_it] = std::minmax_element(vals.begin(), vals.end());
    if (*mn_it == *mx_it) {
        est.value = *mn_it;
        est.std_error = 0.0;
        return est;
    }

    const int nu = model.value_bits;
    const int scale = (1 << nu) - 2;
    std::vector<int> codes(m);
    for (std::size_t i = 0; i < m; ++i)
        codes[i] = encode_fixed_point((vals[i] + bound_b) / (2.0 * bound_b), nu);

    int planes = std::min(nu, std::max(1, static_cast<int>(std::bit_width(
                                              static_cast<unsigned>(model.kappa)) - 1)));
    std::vector<int> alloc = allocate_queries(model.kappa, planes);

    RngSequence seq(stream);
    double beta_hat = 0.0;
    double err_budget = 0.0;
    for (int p = 1; p <= planes; ++p) {
        double a = 0.0;
        for (std::size_t i = 0; i < m; ++i) a += (codes[i] >> (nu - p)) & 1;
        a /= static_cast<double>(m);
        int M = model.grid_bits > 0 ? (1 << model.grid_bits)
                                    : static_cast<int>(std::bit_ceil(
                                          static_cast<unsigned>(std::max(alloc[p - 1], 2))));
        AEOutcome outcome = ae_estimate(a, M, model.repeats, seq);
        double weight = static_cast<double>(1 << (nu - p));
        beta_hat += weight * outcome.amplitude_estimate;
        err_budget += weight / scale * ae_error_bound(M);
    }
    // unestimated low-order planes contribute their centered expectation
    beta_hat += 0.5 * ((1 << (nu - planes)) - 1);
    err_budget += 0.5 * ((1 << (nu - planes)) - 1) / static_cast<double>(scale);
    err_budget += 0.5 / scale;  // encoding quantization

    double mu_y = beta_hat / scale;
    est.value = 2.0 * bound_b * (mu_y - 0.5);
    est.std_error = 2.0 * bound_b * err_budget;
    return est;
}

TermEstimate phi_quant(const ProblemSpec& spec, double eps_term, int kappa, int k,
                       const SparseApprox& approx, RngStream stream,
                       const QueryModel& base_model) {
    if (kappa < 1) throw std::invalid_argument("phi_quant: kappa >= 1 required");
    if (!approx.zero && approx.n_entries > 0 && !approx.cv_filled)
        throw std::logic_error("phi_quant: cv weights not precomputed");

    QueryModel model = base_model;
    model.kappa = kappa;

    std::size_t m = static_cast<std::size_t>(kappa) * static_cast<std::size_t>(kappa);
    RngStream sample_stream = stream.substream(1);
    RngStream outcome_stream = stream.substream(2);
    std::vector<PathSample> samples = sample_batch(k, spec.t_star, spec.d, m, sample_stream);

    auto residual = make_residual(spec, approx);
    double contract_b = eps_term * approx.beta_scale;
    double max_abs = 0.0;
    for (const auto& s : samples) {
        double v = residual(s);
        if (!std::isfinite(v))
            throw InvalidIntegrandSample("invalid integrand sample in phi_quant");
        max_abs = std::max(max_abs, std::abs(v));
    }
    double b = std::max({contract_b, max_abs, 1e-12});

    TermEstimate inner = q_quant_mean(residual, samples, model, b, outcome_stream);

    double g = g_l1_norm(k, spec.t_star);
    double cv_err = approx.cv_error_bound();
    TermEstimate est;
    est.k = k;
    est.value = approx.cv_integral() + g * inner.value;
    est.std_error = std::sqrt(g * g * inner.std_error * inner.std_error + cv_err * cv_err);
    est.queries = inner.queries;
    est.sim_evals = inner.sim_evals + m;  // residual scan + oracle definition
    est.n_evals = 0;
    return est;
}

} // namespace fk
