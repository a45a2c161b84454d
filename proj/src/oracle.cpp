#include "fk/oracle.hpp"

#include "fk/errors.hpp"
#include "fk/kernels.hpp"
#include "fk/parallel.hpp"
#include "fk/quadrature.hpp"
#include "fk/rng.hpp"

#include <atomic>
#include <cmath>
#include <vector>

namespace fk {

namespace {

// integral v dN(0, tI) by tensor Gauss-Hermite at one resolution.
double gh_integral(const ScalarField& v, int d, double t, int n) {
    quad::Rule gh = quad::gauss_hermite(n);
    double pref = std::pow(M_PI, -0.5 * d);
    double s2t = std::sqrt(2.0 * t);
    std::vector<int> idx(d, 0);
    std::vector<double> z(d);
    double acc = 0.0;
    for (;;) {
        double w = 1.0;
        for (int c = 0; c < d; ++c) {
            z[c] = s2t * gh.nodes[idx[c]];
            w *= gh.weights[idx[c]];
        }
        acc += w * v(z);
        int c = 0;
        for (; c < d; ++c) {
            if (++idx[c] < n) break;
            idx[c] = 0;
        }
        if (c == d) break;
    }
    return pref * acc;
}

} // namespace

OracleResult oracle_v_only(const ScalarField& v, const std::optional<FieldDesc>& desc,
                           int d, double t) {
    OracleResult out;
    if (desc) {
        if (desc->preset == "zero") {
            out.value = 0.0;
            return out;
        }
        if (desc->preset == "constant" &&
            !(desc->trunc_radius < std::numeric_limits<double>::infinity())) {
            out.value = desc->value;
            return out;
        }
        if (desc->preset == "gaussian_bump") {
            double w2 = desc->width * desc->width;
            out.value = desc->scale * std::pow(1.0 + 2.0 * t / w2, -0.5 * d);
            return out;
        }
    }
    if (d > 4) throw OracleDimensionLimit("oracle_v_only quadrature limited to d <= 4");
    int n = d == 1 ? 48 : (d == 2 ? 32 : 16);
    double coarse = gh_integral(v, d, t, n - 4);
    double fine = gh_integral(v, d, t, n);
    out.method = OracleMethod::quadrature;
    out.value = fine;
    out.error_estimate = std::abs(fine - coarse);
    return out;
}

OracleResult oracle_constant_potential(const ScalarField& v,
                                       const std::optional<FieldDesc>& desc,
                                       double c, int d, double t) {
    OracleResult base = oracle_v_only(v, desc, d, t);
    double factor = std::exp(c * t);
    base.value *= factor;
    base.error_estimate *= factor;
    return base;
}

OracleResult oracle_dense_path(const ProblemSpec& spec, int n_steps,
                               std::size_t n_paths, std::uint64_t seed) {
    if (n_steps < 100) throw std::invalid_argument("oracle_dense_path: n_steps >= 100");
    if (n_paths < 10000) throw std::invalid_argument("oracle_dense_path: n_paths >= 10^4");
    if (n_steps % 2 == 1) ++n_steps;  // half-grid comparison needs an even count

    const int d = spec.d;
    const double t = spec.t_star;
    const double dt = t / n_steps;
    const double sdt = std::sqrt(dt);

    std::vector<double> fine_vals(n_paths), coarse_vals(n_paths);
    std::atomic<bool> overflow{false};

    RngStream base = make_stream(seed, stream_purpose::dense_path, 0, 0);
    parallel_for(n_paths, 2048, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> x(d);
        for (std::size_t p = lo; p < hi; ++p) {
            RngSequence seq(base.substream(p));
            std::fill(x.begin(), x.end(), 0.0);
            double v0 = spec.V(x);
            double trap_fine = 0.5 * v0;   // times dt at the end
            double trap_half = 0.5 * v0;   // on the 2*dt grid
            for (int s = 1; s <= n_steps; ++s) {
                for (int c = 0; c < d; ++c) x[c] += sdt * seq.next_normal();
                double vv = spec.V(x);
                trap_fine += (s == n_steps) ? 0.5 * vv : vv;
                if (s % 2 == 0) trap_half += (s == n_steps) ? 0.5 * vv : vv;
            }
            double int_fine = trap_fine * dt;
            double int_half = trap_half * 2.0 * dt;
            if (int_fine > 700.0 || int_half > 700.0) {
                overflow.store(true);
                fine_vals[p] = coarse_vals[p] = 0.0;
                continue;
            }
            double vT = spec.v(x);
            fine_vals[p] = vT * std::exp(int_fine);
            coarse_vals[p] = vT * std::exp(int_half);
        }
    });
    if (overflow.load())
        throw InvalidIntegrandSample("potential unbounded above on sampled paths");

    OracleResult out;
    out.method = OracleMethod::dense_path_mc;
    out.value = kernels::mean(fine_vals.data(), n_paths);
    double var = kernels::sample_variance(fine_vals.data(), n_paths);
    out.stat_error = std::sqrt(var / static_cast<double>(n_paths));
    double coarse_mean = kernels::mean(coarse_vals.data(), n_paths);
    out.disc_error = std::abs(out.value - coarse_mean);
    out.error_estimate = out.stat_error + out.disc_error;
    return out;
}

OracleResult reference_solution(const ProblemSpec& spec) {
    if (!spec.V_desc) throw ConfigError("no reference oracle: potential is not a preset");
    const FieldDesc& Vd = *spec.V_desc;
    if (Vd.preset == "zero" || (Vd.preset == "constant" && Vd.value == 0.0))
        return oracle_v_only(spec.v, spec.v_desc, spec.d, spec.t_star);
    if (Vd.preset == "constant")
        return oracle_constant_potential(spec.v, spec.v_desc, Vd.value, spec.d, spec.t_star);
    if (Vd.preset == "harmonic_potential")
        return oracle_dense_path(spec, 1000, 400000, 777);
    throw ConfigError("no reference oracle for potential preset '" + Vd.preset + "'");
}

} // namespace fk
