#include "fk/model.hpp"

#include "fk/errors.hpp"
#include "fk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fk {

double class_weight_1d(const FunctionClassTag& tag, double x) {
    if (tag.kind == ClassKind::WeightedSobolevGaussian) return std::exp(-x * x);
    return 1.0;
}

double class_weight(const FunctionClassTag& tag, std::span<const double> z) {
    if (tag.kind == ClassKind::WeightedSobolevGaussian) {
        double s = 0.0;
        for (double x : z) s += x * x;
        return std::exp(-s);
    }
    return 1.0;
}

namespace {

double sq_norm(std::span<const double> z) {
    double s = 0.0;
    for (double x : z) s += x * x;
    return s;
}

// Quintic smoothstep: 1 on [0, R], 0 beyond R + w, C^2 transition.
double radial_cutoff(double radius, double R, double w) {
    if (!(R < std::numeric_limits<double>::infinity())) return 1.0;
    if (radius <= R) return 1.0;
    if (radius >= R + w) return 0.0;
    double u = (radius - R) / w;
    double p = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
    return 1.0 - p;
}

std::string point_to_string(std::span<const double> z) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (i) os << ", ";
        os << z[i];
    }
    os << ")";
    return os.str();
}

// Halton sequence point (bases 2, 3, 5, 7, 11, 13, ...), index >= 1.
constexpr int kHaltonBases[8] = {2, 3, 5, 7, 11, 13, 17, 19};

double halton(std::uint64_t index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * static_cast<double>(index % base);
        index /= base;
    }
    return r;
}

} // namespace

ScalarField make_field(const FieldDesc& desc, int /*d*/) {
    if (desc.preset == "zero") {
        return [](std::span<const double>) { return 0.0; };
    }
    if (desc.preset == "gaussian_bump") {
        double s = desc.scale;
        double inv_w2 = 1.0 / (desc.width * desc.width);
        return [s, inv_w2](std::span<const double> z) {
            return s * std::exp(-sq_norm(z) * inv_w2);
        };
    }
    if (desc.preset == "constant") {
        double c = desc.value;
        double R = desc.trunc_radius;
        double w = desc.trunc_width;
        if (!(R < std::numeric_limits<double>::infinity()))
            return [c](std::span<const double>) { return c; };
        return [c, R, w](std::span<const double> z) {
            return c * radial_cutoff(std::sqrt(sq_norm(z)), R, w);
        };
    }
    if (desc.preset == "harmonic_potential") {
        double a = 0.5 * desc.curvature;
        double R = desc.trunc_radius;
        double w = desc.trunc_width;
        return [a, R, w](std::span<const double> z) {
            double r2 = sq_norm(z);
            return a * r2 * radial_cutoff(std::sqrt(r2), R, w);
        };
    }
    throw ConfigError("unknown function preset '" + desc.preset + "'");
}

ValidationReport validate_membership(const ProblemSpec& spec, const ClassParams& params,
                                     const FunctionClassTag& tag, int probe_count,
                                     std::uint64_t seed) {
    if (probe_count < 1) throw ConfigError("probe_count must be >= 1");
    ValidationReport rep;
    rep.probe_count = probe_count;
    rep.v_worst_point.assign(spec.d, 0.0);
    rep.V_worst_point.assign(spec.d, 0.0);

    const double L = tag.domain_halfwidth_L;
    // seed selects the start offset in the Halton stream
    std::uint64_t offset = rng_detail::splitmix64(seed) % 100003;

    std::vector<double> z(spec.d);
    for (int i = 0; i < probe_count; ++i) {
        std::uint64_t idx = offset + 1 + static_cast<std::uint64_t>(i);
        for (int c = 0; c < spec.d; ++c)
            z[c] = (2.0 * halton(idx, kHaltonBases[c % 8]) - 1.0) * L;
        double w = class_weight(tag, z);
        double fv = spec.v(z);
        double fV = spec.V(z);
        if (!std::isfinite(fv))
            throw InvalidInputFunction("invalid input function: v non-finite at " +
                                       point_to_string(z));
        if (!std::isfinite(fV))
            throw InvalidInputFunction("invalid input function: V non-finite at " +
                                       point_to_string(z));
        double rv = std::abs(fv) / w;
        double rV = std::abs(fV) / w;
        if (rv > rep.v_measured_norm) {
            rep.v_measured_norm = rv;
            std::copy(z.begin(), z.end(), rep.v_worst_point.begin());
        }
        if (rV > rep.V_measured_norm) {
            rep.V_measured_norm = rV;
            std::copy(z.begin(), z.end(), rep.V_worst_point.begin());
        }
    }
    rep.v_ok = !(rep.v_measured_norm > params.beta1);
    rep.V_ok = !(rep.V_measured_norm > params.beta2);
    return rep;
}

ProblemSpec shift_to_origin(const ProblemSpec& spec) {
    ProblemSpec out = spec;
    bool zero = true;
    for (double u : spec.u_star)
        if (u != 0.0) zero = false;
    if (zero) {
        out.u_star.assign(spec.d, 0.0);
        return out;
    }
    std::vector<double> shift = spec.u_star;
    auto translate = [shift](ScalarField f) {
        return ScalarField([f = std::move(f), shift](std::span<const double> z) {
            std::vector<double> zz(z.size());
            for (std::size_t i = 0; i < z.size(); ++i) zz[i] = z[i] + shift[i];
            return f(zz);
        });
    };
    out.v = translate(spec.v);
    out.V = translate(spec.V);
    out.u_star.assign(spec.d, 0.0);
    // translated handles no longer match a preset closed form
    out.v_desc.reset();
    out.V_desc.reset();
    return out;
}

namespace {

ProblemSpec basic_spec(int d, double t, FieldDesc vd, FieldDesc Vd) {
    ProblemSpec s;
    s.d = d;
    s.t_star = t;
    s.u_star.assign(d, 0.0);
    s.v = make_field(vd, d);
    s.V = make_field(Vd, d);
    s.v_desc = vd;
    s.V_desc = Vd;
    return s;
}

} // namespace

ProblemBundle make_problem_preset(const std::string& name, double c) {
    ProblemBundle b;
    b.name = name;
    FieldDesc one{.preset = "constant", .value = 1.0};
    FieldDesc zero{.preset = "zero"};
    FieldDesc gauss{.preset = "gaussian_bump"};

    if (name == "v1_V0_d1") {
        b.spec = basic_spec(1, 1.0, one, zero);
        b.tag = {ClassKind::Custom, 4.0};
        b.params = {1.05, 0.01, 1.0, 1.0, 1};
        return b;
    }
    if (name == "gauss_V0_d1") {
        b.spec = basic_spec(1, 1.0, gauss, zero);
        b.tag = {ClassKind::WeightedSobolevGaussian, 6.0};
        b.params = {1.0, 0.01, 1.0, 1.0, 1};
        return b;
    }
    if (name == "gauss_V0_d2") {
        b.spec = basic_spec(2, 1.0, gauss, zero);
        b.tag = {ClassKind::WeightedSobolevGaussian, 6.0};
        b.params = {1.0, 0.01, 1.0, 1.0, 2};
        return b;
    }
    if (name == "gauss_cpot_d1") {
        FieldDesc pot{.preset = "constant", .value = c, .trunc_radius = 3.0, .trunc_width = 2.0};
        b.spec = basic_spec(1, 1.0, gauss, pot);
        b.tag = {ClassKind::Custom, 5.0};
        b.params = {2.0, std::max(0.01, 2.0 * std::abs(c)), 1.0, 1.0, 1};
        return b;
    }
    if (name == "gauss_cpot_d2") {
        FieldDesc pot{.preset = "constant", .value = c, .trunc_radius = 3.0, .trunc_width = 2.0};
        b.spec = basic_spec(2, 1.0, gauss, pot);
        b.tag = {ClassKind::Custom, 5.0};
        b.params = {8.0, std::max(0.01, 3.5 * std::abs(c)), 1.0, 1.0, 2};
        return b;
    }
    if (name == "harmonic_d1") {
        FieldDesc pot{.preset = "harmonic_potential", .curvature = -1.0,
                      .trunc_radius = 3.0, .trunc_width = 2.0};
        b.spec = basic_spec(1, 1.0, one, pot);
        b.tag = {ClassKind::Custom, 5.0};
        // beta2 = 1 is the documented default; the truncated harmonic potential
        // exceeds the unit ball, validation reports this, solve still runs.
        b.params = {1.05, 1.0, 0.5, 1.0, 2};
        return b;
    }
    throw ConfigError("unknown problem preset '" + name + "'");
}

std::vector<std::string> problem_preset_names() {
    return {"v1_V0_d1", "gauss_V0_d1", "gauss_V0_d2",
            "gauss_cpot_d1", "gauss_cpot_d2", "harmonic_d1"};
}

} // namespace fk
