#include "fk/series.hpp"

#include "fk/errors.hpp"
#include "fk/quadrature.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace fk {

double eval_transition_density(std::span<const double> times,
                               std::span<const double> points,
                               double t, int d) {
    int k = static_cast<int>(times.size());
    if (points.size() != static_cast<std::size_t>((k + 1) * d))
        throw std::invalid_argument("eval_transition_density: points size mismatch");
    if (t <= 0.0) throw std::invalid_argument("eval_transition_density: t must be positive");
    for (int i = 0; i < k; ++i) {
        if (times[i] <= 0.0 || times[i] >= t)
            throw std::invalid_argument("eval_transition_density: times must lie in (0, t)");
        if (i > 0 && times[i] < times[i - 1])
            throw std::invalid_argument("eval_transition_density: times must be sorted");
    }

    const double log2pi = std::log(2.0 * M_PI);
    double log_value = 0.0;
    for (int seg = 0; seg <= k; ++seg) {
        double t_lo = seg == 0 ? 0.0 : times[seg - 1];
        double t_hi = seg == k ? t : times[seg];
        double dt = t_hi - t_lo;
        if (dt <= 0.0) {
            std::ostringstream os;
            os << "degenerate time partition: zero variance between t_" << seg
               << " and t_" << (seg + 1);
            throw DegenerateTimePartition(os.str());
        }
        double sq = 0.0;
        for (int c = 0; c < d; ++c) {
            double prev = seg == 0 ? 0.0 : points[(seg - 1) * d + c];
            double diff = points[seg * d + c] - prev;
            sq += diff * diff;
        }
        log_value += -0.5 * d * (log2pi + std::log(dt)) - 0.5 * sq / dt;
    }
    return std::exp(log_value);
}

double g_l1_norm(int k, double t) {
    if (k < 0) throw std::invalid_argument("g_l1_norm: k >= 0 required");
    if (t <= 0.0) throw std::invalid_argument("g_l1_norm: t > 0 required");
    double v = 1.0;
    for (int i = 1; i <= k; ++i) v *= t / static_cast<double>(i);
    return v;
}

double product_h(const ScalarField& v, const ScalarField& V,
                 std::span<const double> points, int k, int d) {
    if (points.size() != static_cast<std::size_t>((k + 1) * d))
        throw std::invalid_argument("product_h: points size mismatch");
    double prod = 1.0;
    for (int i = 0; i < k; ++i) {
        double val = V(points.subspan(static_cast<std::size_t>(i) * d, d));
        if (!std::isfinite(val))
            throw InvalidInputFunction("invalid input function: V non-finite in product_h");
        prod *= val;
    }
    double vv = v(points.subspan(static_cast<std::size_t>(k) * d, d));
    if (!std::isfinite(vv))
        throw InvalidInputFunction("invalid input function: v non-finite in product_h");
    return prod * vv;
}

namespace {

// One quadrature pass at the given resolutions.
double term_quadrature(int k, const ProblemSpec& spec, int n_time, int n_space) {
    const int d = spec.d;
    const double t = spec.t_star;
    const int space_dims = (k + 1) * d;

    quad::Rule gh = quad::gauss_hermite(n_space);
    double pref = std::pow(M_PI, -0.5 * space_dims);

    std::vector<double> points(space_dims);
    std::vector<int> sidx(space_dims, 0);

    // Inner Gaussian-chain sum for a fixed time partition. sqrt2dt[seg] is
    // sqrt(2 * variance of segment seg).
    auto inner_sum = [&](const std::vector<double>& sqrt2dt) {
        std::fill(sidx.begin(), sidx.end(), 0);
        double acc = 0.0;
        for (;;) {
            double w = 1.0;
            for (int b = 0; b <= k; ++b) {
                for (int c = 0; c < d; ++c) {
                    int dim = b * d + c;
                    double prev = b == 0 ? 0.0 : points[(b - 1) * d + c];
                    points[dim] = prev + sqrt2dt[b] * gh.nodes[sidx[dim]];
                    w *= gh.weights[sidx[dim]];
                }
            }
            acc += w * product_h(spec.v, spec.V, points, k, d);
            int dim = 0;
            for (; dim < space_dims; ++dim) {
                if (++sidx[dim] < n_space) break;
                sidx[dim] = 0;
            }
            if (dim == space_dims) break;
        }
        return pref * acc;
    };

    if (k == 0) {
        std::vector<double> sqrt2dt{std::sqrt(2.0 * t)};
        return inner_sum(sqrt2dt);
    }

    // Duffy map from the unit cube to the ordered simplex:
    // tau_j = u_j u_{j+1} ... u_k, Jacobian prod_{i>=2} u_i^{i-1}.
    quad::Rule gl = quad::gauss_legendre(n_time);
    std::vector<double> u(k), tau(k);
    std::vector<double> sqrt2dt(k + 1);
    std::vector<int> tidx(k, 0);

    double t_pow_k = 1.0;
    for (int i = 0; i < k; ++i) t_pow_k *= t;

    double total = 0.0;
    for (;;) {
        double tw = 1.0;
        for (int i = 0; i < k; ++i) {
            u[i] = 0.5 * (gl.nodes[tidx[i]] + 1.0);
            tw *= 0.5 * gl.weights[tidx[i]];
        }
        double jac = 1.0;
        tau[k - 1] = u[k - 1];
        for (int j = k - 2; j >= 0; --j) tau[j] = u[j] * tau[j + 1];
        for (int i = 1; i < k; ++i) jac *= std::pow(u[i], i);

        bool ok = true;
        for (int seg = 0; seg <= k; ++seg) {
            double lo = seg == 0 ? 0.0 : t * tau[seg - 1];
            double hi = seg == k ? t : t * tau[seg];
            double dt = hi - lo;
            if (dt <= 0.0) { ok = false; break; }
            sqrt2dt[seg] = std::sqrt(2.0 * dt);
        }
        if (ok) total += tw * jac * inner_sum(sqrt2dt);

        int i = 0;
        for (; i < k; ++i) {
            if (++tidx[i] < n_time) break;
            tidx[i] = 0;
        }
        if (i == k) break;
    }
    return t_pow_k * total;
}

} // namespace

TermValue term_reference_value(int k, const ProblemSpec& spec, const QuadSpec& quad) {
    if (k < 0) throw std::invalid_argument("term_reference_value: k >= 0 required");
    if ((k + 1) * spec.d > 6) {
        std::ostringstream os;
        os << "oracle dimension limit: (k+1)*d = " << (k + 1) * spec.d << " exceeds 6";
        throw OracleDimensionLimit(os.str());
    }
    double coarse = term_quadrature(k, spec, quad.n_time, quad.n_space);
    double fine = term_quadrature(k, spec, quad.n_time + 2, quad.n_space + 3);
    TermValue out;
    out.value = fine;
    out.error_estimate = std::abs(fine - coarse);
    return out;
}

} // namespace fk
