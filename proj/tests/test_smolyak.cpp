#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fk/errors.hpp"
#include "fk/series.hpp"
#include "fk/smolyak.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace fk;

namespace {

const FunctionClassTag kGauss{ClassKind::WeightedSobolevGaussian, 6.0};
const FunctionClassTag kBox{ClassKind::Custom, 4.0};

ClassParams params_r(int r, double beta1 = 1.0, double beta2 = 1.0) {
    return ClassParams{beta1, beta2, 1.0 / r, 1.0, r};
}

// rho-weighted kink function: the derivative jumps at irrational points, so
// piecewise-linear interpolation converges at exactly first order, which is
// what the class-rate checks need.
double kinked(double x) {
    return std::abs(std::sin(3.3 * x)) * std::exp(-x * x);
}

} // namespace

TEST_CASE("1D operator level 0 is the weighted constant through the origin") {
    auto op = build_1d_operator(0, kGauss, params_r(1));
    REQUIRE(op.nodes.size() == 1);
    CHECK(op.nodes[0] == 0.0);
    CHECK(op.basis(0, 0.0) == doctest::Approx(1.0));
    // basis is rho(x)/rho(0); a multiple of rho is reproduced exactly
    for (double x : {-2.0, -0.5, 1.25}) {
        CHECK(op.basis(0, x) == doctest::Approx(std::exp(-x * x)));
    }
}

TEST_CASE("1D basis is cardinal at its nodes") {
    for (int r : {1, 2}) {
        auto op = build_1d_operator(3, kGauss, params_r(r));
        for (std::size_t i = 0; i < op.nodes.size(); ++i)
            for (std::size_t j = 0; j < op.nodes.size(); ++j)
                CHECK(op.basis(static_cast<int>(j), op.nodes[i]) ==
                      doctest::Approx(i == j ? 1.0 : 0.0).scale(1.0));
    }
}

TEST_CASE("1D error bound decreases geometrically and holds for sin * rho") {
    auto p = params_r(1);
    double prev = build_1d_operator(0, kGauss, p).error_bound;
    for (int level = 1; level <= 8; ++level) {
        double cur = build_1d_operator(level, kGauss, p).error_bound;
        CHECK(cur <= prev + 1e-15);
        if (level >= 3) CHECK(cur <= 0.75 * prev);
        prev = cur;
    }

    // interpolate f = sin(z) rho(z); ||f||_F <= 2 in the C^1 weighted norm
    auto op = build_1d_operator(5, kGauss, p);
    auto f = [](double x) { return std::sin(x) * std::exp(-x * x); };
    double sup = 0.0;
    for (int i = 0; i <= 10000; ++i) {
        double x = -op.L + 2.0 * op.L * i / 10000.0;
        double u = 0.0;
        for (std::size_t j = 0; j < op.nodes.size(); ++j)
            u += f(op.nodes[j]) * op.basis(static_cast<int>(j), x);
        sup = std::max(sup, std::abs(f(x) - u));
    }
    CHECK(sup <= 2.0 * op.error_bound);  // norm factor 2
}

TEST_CASE("zero function builds a zero approximant at any eps") {
    TensorField h = [](std::span<const double>) { return 0.0; };
    auto ap = build_sparse(h, 0.05, 1, 1, kGauss, params_r(1));
    CHECK(ap.probe_error == 0.0);
    std::vector<double> z{0.3, -0.4};
    CHECK(ap.eval(z) == 0.0);
}

TEST_CASE("eps above the embedding bound invokes the zero algorithm") {
    TensorField h = [](std::span<const double> z) { return std::exp(-z[0] * z[0]); };
    auto ap = build_sparse(h, 1.5, 0, 1, kGauss, params_r(1));
    CHECK(ap.zero);
    CHECK(ap.n_nodes == 0);
    std::vector<double> z{0.2};
    CHECK(ap.eval(z) == 0.0);
}

TEST_CASE("separable multiples of rho are reproduced exactly") {
    // h(z1, z2) = c * rho(z1) rho(z2) for k=1, d=1
    TensorField h = [](std::span<const double> z) {
        return 0.7 * std::exp(-z[0] * z[0] - z[1] * z[1]);
    };
    auto ap = build_sparse(h, 0.05, 1, 1, kGauss, params_r(1));
    CHECK(ap.probe_error <= 1e-12);
    CHECK(ap.certified);
}

TEST_CASE("narrow gaussian bump meets the probe certificate") {
    TensorField h = [](std::span<const double> z) { return std::exp(-z[0] * z[0] / 0.64); };
    auto p = params_r(1, 2.0, 1.0);
    auto ap = build_sparse(h, 0.1, 0, 1, kGauss, p);
    CHECK(ap.certified);
    CHECK(ap.probe_error <= 0.1 * 2.0);
    CHECK(measure_sup_error(ap, h, 10000) <= 0.1 * 2.0);
}

TEST_CASE("interpolation reproduces h at stored node tuples when pruning is off") {
    TensorField h = [](std::span<const double> z) {
        return std::exp(-z[0] * z[0] / 0.8 - 0.5 * z[1] * z[1]);
    };
    BuildOptions opts;
    opts.prune_tol_frac = 0.0;
    auto p = params_r(1, 2.0, 1.0);
    auto ap = build_sparse(h, 0.08, 1, 1, kGauss, p, opts);
    REQUIRE(ap.n_entries > 0);
    int dims = 2;
    for (std::size_t e = 0; e < ap.n_entries; e += std::max<std::size_t>(1, ap.n_entries / 64)) {
        std::span<const double> z(ap.node_tuples.data() + e * dims, dims);
        double hv = h(z);
        double uv = ap.eval(z);
        CHECK(uv == doctest::Approx(hv).epsilon(1e-12).scale(std::abs(hv) + 1.0));
    }
}

TEST_CASE("mid-cell evaluation is linear interpolation of neighbor values") {
    // k=0, d=1, r=1, unweighted box class: U is piecewise linear at level q
    TensorField h = [](std::span<const double> z) { return std::cos(1.3 * z[0]); };
    BuildOptions opts;
    opts.prune_tol_frac = 0.0;
    auto ap = build_sparse(h, 0.01, 0, 1, kBox, params_r(1, 2.0, 1.0), opts);
    REQUIRE(ap.q >= 2);
    double L = kBox.domain_halfwidth_L;
    double cell = 2.0 * L / (1 << ap.q);
    double x0 = -L + 3 * cell, x1 = x0 + cell;
    std::vector<double> zm{0.5 * (x0 + x1)};
    std::vector<double> za{x0}, zb{x1};
    CHECK(ap.eval(zm) == doctest::Approx(0.5 * (ap.eval(za) + ap.eval(zb))).epsilon(1e-12));
    // and nodes carry h values
    CHECK(ap.eval(za) == doctest::Approx(h(za)).epsilon(1e-12));
}

TEST_CASE("node count grows monotonically as eps halves, slope near alpha = 1") {
    auto p = params_r(1, 5.0, 1.0);
    TensorField h = [](std::span<const double> z) { return kinked(z[0]); };
    BuildOptions opts;
    opts.probe_count = 6000;
    std::vector<double> eps_list;
    for (int e = 2; e <= 8; ++e) eps_list.push_back(std::pow(2.0, -e));
    std::vector<double> counts;
    std::size_t prev = 0;
    for (double eps : eps_list) {
        auto ap = build_sparse(h, eps / p.beta1, 0, 1, kGauss, p, opts);
        CHECK(ap.n_nodes >= prev);  // n(eps/2) >= n(eps)
        prev = ap.n_nodes;
        counts.push_back(static_cast<double>(ap.n_nodes));
        CHECK(measure_sup_error(ap, h, 4000) <= eps * 1.1);
    }
    // least-squares slope of log n against log(1/eps)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = static_cast<int>(eps_list.size());
    for (int i = 0; i < n; ++i) {
        double x = std::log(1.0 / eps_list[i]);
        double y = std::log(counts[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("node budget overflow raises") {
    TensorField h = [](std::span<const double> z) { return kinked(z[0]); };
    BuildOptions opts;
    opts.node_budget = 16;
    auto p = params_r(1, 5.0, 1.0);
    CHECK_THROWS_AS(build_sparse(h, 0.001, 0, 1, kGauss, p, opts),
                    SparseGridBudgetExceeded);
}

TEST_CASE("cv weight of the single level-0 node is the Gaussian overlap") {
    // basis rho(z)/rho(0) under k=0, t=1, d=1: integral = 1/sqrt(3)
    TensorField h = [](std::span<const double> z) { return std::exp(-z[0] * z[0]); };
    auto ap = build_sparse(h, 0.5, 0, 1, kGauss, params_r(1));
    REQUIRE(ap.n_entries == 1);
    auto stats = precompute_cv_weights(ap, 1.0);
    CHECK(stats.precision_met);
    CHECK(ap.cv_weights[0] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(0.02));
    // exact reproduction: I(U h) matches the known integral closely
    CHECK(ap.cv_integral() == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(0.02));
}

TEST_CASE("box-class constant: total mass of the precomputed part is ~1") {
    TensorField h = [](std::span<const double>) { return 1.0; };
    auto ap = build_sparse(h, 0.2, 0, 1, kBox, params_r(1, 1.05, 1.0));
    auto stats = precompute_cv_weights(ap, 1.0);
    CHECK(stats.precision_met);
    // the constant is reproduced by the root alone; its weight is the
    // g_1 mass of the box, which is 1 up to the far Gaussian tail
    CHECK(ap.cv_integral() == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("I(U h) matches the quadrature reference for a generic integrand") {
    TensorField h = [](std::span<const double> z) {
        return std::exp(-z[0] * z[0] / 0.64) * std::exp(-z[1] * z[1]);
    };
    auto p = params_r(1, 2.0, 1.0);
    auto ap = build_sparse(h, 0.02, 1, 1, kGauss, p);
    precompute_cv_weights(ap, 1.0);

    ProblemSpec spec;
    spec.d = 1;
    spec.t_star = 1.0;
    spec.u_star = {0.0};
    spec.v = [](std::span<const double> z) { return std::exp(-z[0] * z[0] / 0.64); };
    spec.V = [](std::span<const double> z) { return std::exp(-z[0] * z[0]); };
    TermValue ref = term_reference_value(1, spec, QuadSpec{8, 24});
    // |I(Uh) - I(h)| <= eps-level interpolation error + cv noise
    CHECK(ap.cv_integral() == doctest::Approx(ref.value).epsilon(0.05));
}

TEST_CASE("cv cache round-trips and recovers from corruption") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "fk_cv_test";
    fs::remove_all(dir);

    TensorField h = [](std::span<const double> z) { return std::exp(-z[0] * z[0] / 0.7); };
    auto p = params_r(1, 2.0, 1.0);
    PrecomputeOptions opts;
    opts.cache_dir = dir.string();

    auto ap1 = build_sparse(h, 0.1, 0, 1, kGauss, p);
    auto s1 = precompute_cv_weights(ap1, 1.0, opts);
    CHECK_FALSE(s1.cache_hit);
    CHECK(s1.samples_used > 0);

    auto ap2 = build_sparse(h, 0.1, 0, 1, kGauss, p);
    auto s2 = precompute_cv_weights(ap2, 1.0, opts);
    CHECK(s2.cache_hit);
    CHECK(s2.samples_used == 0);
    CHECK(ap1.cv_weights == ap2.cv_weights);

    // different eps gets a different key, old entries untouched
    std::size_t files_before = std::distance(fs::directory_iterator(dir), {});
    auto ap3 = build_sparse(h, 0.05, 0, 1, kGauss, p);
    precompute_cv_weights(ap3, 1.0, opts);
    std::size_t files_after = std::distance(fs::directory_iterator(dir), {});
    CHECK(files_after == files_before + 1);

    // corrupt every cache file: recompute with a warning, same values
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::ofstream f(entry.path(), std::ios::binary | std::ios::trunc);
        f << "garbage";
    }
    auto ap4 = build_sparse(h, 0.1, 0, 1, kGauss, p);
    auto s4 = precompute_cv_weights(ap4, 1.0, opts);
    CHECK_FALSE(s4.cache_hit);
    CHECK(s4.cache_corrupt);
    CHECK(ap4.cv_weights == ap1.cv_weights);

    fs::remove_all(dir);
}
