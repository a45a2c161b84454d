#include "fk/estimators.hpp"

#include "fk/errors.hpp"
#include "fk/kernels.hpp"
#include "fk/parallel.hpp"
#include "fk/series.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <vector>

namespace fk {

namespace {

std::string dump_sample(const PathSample& s) {
    std::ostringstream os;
    os << "k=" << s.k << " times=[";
    for (std::size_t i = 0; i < s.times.size(); ++i)
        os << (i ? "," : "") << s.times[i];
    os << "] points=[";
    for (std::size_t i = 0; i < s.points.size(); ++i)
        os << (i ? "," : "") << s.points[i];
    os << "]";
    return os.str();
}

} // namespace

TermEstimate mc_mean(const PathIntegrand& f, int k, double t, int d, std::size_t m,
                     RngStream stream) {
    if (m < 1) throw std::invalid_argument("mc_mean: m >= 1 required");
    std::vector<double> values(m);
    std::vector<PathSample> bad(1);
    std::atomic<bool> invalid{false};
    parallel_for(m, kDefaultChunk, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            PathSample s = sample_path(k, t, d, stream.substream(i));
            double v = f(s);
            if (!std::isfinite(v)) {
                bool expected = false;
                if (invalid.compare_exchange_strong(expected, true)) bad[0] = std::move(s);
                v = 0.0;
            }
            values[i] = v;
        }
    });
    if (invalid.load())
        throw InvalidIntegrandSample("invalid integrand sample: " + dump_sample(bad[0]));

    double norm = g_l1_norm(k, t);
    TermEstimate est;
    est.k = k;
    est.n_evals = m;
    est.value = norm * kernels::mean(values.data(), m);
    if (m == 1) {
        est.std_error = std::numeric_limits<double>::infinity();
    } else {
        double var = kernels::sample_variance(values.data(), m);
        est.std_error = norm * std::sqrt(var / static_cast<double>(m));
    }
    return est;
}

PathIntegrand make_h_integrand(const ProblemSpec& spec, int k) {
    return [v = spec.v, V = spec.V, k, d = spec.d](const PathSample& s) {
        return product_h(v, V, s.points, k, d);
    };
}

PathIntegrand make_residual(const ProblemSpec& spec, const SparseApprox& approx) {
    int k = approx.k;
    return [v = spec.v, V = spec.V, k, d = spec.d, &approx](const PathSample& s) {
        return product_h(v, V, s.points, k, d) - approx.eval(s.points);
    };
}

TermEstimate phi_rand(const ProblemSpec& spec, double /*eps_term*/, std::size_t m, int k,
                      const SparseApprox& approx, RngStream stream) {
    if (!approx.zero && approx.n_entries > 0 && !approx.cv_filled)
        throw std::logic_error("phi_rand: cv weights not precomputed");
    TermEstimate est = mc_mean(make_residual(spec, approx), k, spec.t_star, spec.d, m, stream);
    double cv_part = approx.cv_integral();
    double cv_err = approx.cv_error_bound();
    est.value += cv_part;
    if (std::isfinite(est.std_error))
        est.std_error = std::sqrt(est.std_error * est.std_error + cv_err * cv_err);
    return est;
}

double empirical_variance_ratio(const ProblemSpec& spec, int k,
                                const SparseApprox& approx, std::size_t m,
                                RngStream stream) {
    if (m < 2) throw std::invalid_argument("empirical_variance_ratio: m >= 2 required");
    std::vector<double> h_vals(m), r_vals(m);
    auto h = make_h_integrand(spec, k);
    parallel_for(m, kDefaultChunk, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            PathSample s = sample_path(k, spec.t_star, spec.d, stream.substream(i));
            double hv = h(s);
            h_vals[i] = hv;
            r_vals[i] = hv - approx.eval(s.points);
        }
    });
    double vh = kernels::sample_variance(h_vals.data(), m);
    double vr = kernels::sample_variance(r_vals.data(), m);
    if (vr <= 0.0) return std::numeric_limits<double>::infinity();
    return vh / vr;
}

} // namespace fk
