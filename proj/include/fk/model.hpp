#pragma once

// Problem definition: dimension, terminal time, evaluation point, the input
// functions v (initial value) and V (potential), and the function-class
// parameters used for budgeting and validation.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fk {

using ScalarField = std::function<double(std::span<const double>)>;

// Descriptor for a built-in function preset; kept next to the callable so
// oracles and config round-trips can recognize closed-form cases.
struct FieldDesc {
    std::string preset;          // gaussian_bump | constant | harmonic_potential | zero
    double scale = 1.0;          // gaussian_bump: scale * exp(-||z||^2 / width^2)
    double width = 1.0;
    double value = 0.0;          // constant: value * cutoff(||z||)
    double curvature = -1.0;     // harmonic: 0.5 * curvature * ||z||^2 * cutoff(||z||)
    double trunc_radius = std::numeric_limits<double>::infinity();
    double trunc_width = 2.0;    // cutoff transition width
};

struct ProblemSpec {
    int d = 1;
    double t_star = 1.0;
    std::vector<double> u_star;  // length d
    ScalarField v;
    ScalarField V;
    std::optional<FieldDesc> v_desc;
    std::optional<FieldDesc> V_desc;
};

struct ClassParams {
    double beta1 = 1.0;        // bound on ||v||_F
    double beta2 = 1.0;        // bound on ||V||_F
    double alpha = 1.0;        // uniform-approximation exponent of the class
    double embed_K = 1.0;      // sup-norm embedding constant
    int smoothness_r = 1;      // derivative order of the example class
};

enum class ClassKind { WeightedSobolevGaussian, Custom };

struct FunctionClassTag {
    ClassKind kind = ClassKind::WeightedSobolevGaussian;
    double domain_halfwidth_L = 4.0;
};

// Weight defining the class norm scaling: exp(-||z||^2) for the
// Gaussian-weighted Sobolev class, 1 for the box-truncated custom class.
double class_weight_1d(const FunctionClassTag& tag, double x);
double class_weight(const FunctionClassTag& tag, std::span<const double> z);

struct ValidationReport {
    double v_measured_norm = 0.0;  // sup |v|/rho over the probe set
    double V_measured_norm = 0.0;
    bool v_ok = true;              // measured <= beta (equality passes)
    bool V_ok = true;
    int probe_count = 0;
    std::vector<double> v_worst_point;
    std::vector<double> V_worst_point;
};

// Samples |f|/rho on a deterministic low-discrepancy probe set over
// [-L, L]^d. Advisory: callers warn on violation rather than abort.
// Throws InvalidInputFunction if v or V returns a non-finite value.
ValidationReport validate_membership(const ProblemSpec& spec, const ClassParams& params,
                                     const FunctionClassTag& tag, int probe_count,
                                     std::uint64_t seed);

// Returns the spec translated so that u_star = 0 and v, V are replaced by
// their translates v(. + u*), V(. + u*). Idempotent.
ProblemSpec shift_to_origin(const ProblemSpec& spec);

// Materializes a preset descriptor into a callable.
ScalarField make_field(const FieldDesc& desc, int d);

// A complete named problem bundle (problem + class) used by the CLI.
struct ProblemBundle {
    std::string name;
    ProblemSpec spec;
    ClassParams params;
    FunctionClassTag tag;
};

// Built-in problem presets: v1_V0_d1, gauss_V0_d1, gauss_V0_d2,
// gauss_cpot_d1, gauss_cpot_d2 (parameter c), harmonic_d1.
// Throws ConfigError for unknown names.
ProblemBundle make_problem_preset(const std::string& name, double c = 0.25);

std::vector<std::string> problem_preset_names();

} // namespace fk
