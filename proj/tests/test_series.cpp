#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fk/errors.hpp"
#include "fk/series.hpp"

#include <cmath>

using namespace fk;

namespace {

ProblemSpec make_spec(int d, double t, ScalarField v, ScalarField V) {
    ProblemSpec s;
    s.d = d;
    s.t_star = t;
    s.u_star.assign(d, 0.0);
    s.v = std::move(v);
    s.V = std::move(V);
    return s;
}

const ScalarField kOne = [](std::span<const double>) { return 1.0; };

} // namespace

TEST_CASE("transition density: standard normal values") {
    // k=0, d=1, t=1, z=0: (2 pi)^{-1/2}
    std::vector<double> none;
    std::vector<double> z1{0.0};
    CHECK(eval_transition_density(none, z1, 1.0, 1) ==
          doctest::Approx(0.3989422804014327));

    // k=0, d=2: (2 pi)^{-1}
    std::vector<double> z2{0.0, 0.0};
    CHECK(eval_transition_density(none, z2, 1.0, 2) ==
          doctest::Approx(0.15915494309189535));

    // k=1, t=1, t1=0.5, z=(0,0): (2 pi 0.5)^{-1/2} squared = 1/pi
    std::vector<double> times{0.5};
    std::vector<double> zz{0.0, 0.0};
    CHECK(eval_transition_density(times, zz, 1.0, 1) ==
          doctest::Approx(1.0 / M_PI));
}

TEST_CASE("transition density is symmetric under global negation") {
    std::vector<double> times{0.3, 0.7};
    std::vector<double> pts{0.4, -0.2, 1.1};
    std::vector<double> neg{-0.4, 0.2, -1.1};
    CHECK(eval_transition_density(times, pts, 1.0, 1) ==
          doctest::Approx(eval_transition_density(times, neg, 1.0, 1)));
}

TEST_CASE("degenerate time partition raises") {
    std::vector<double> times{0.5, 0.5};
    std::vector<double> pts{0.0, 0.0, 0.0};
    CHECK_THROWS_AS(eval_transition_density(times, pts, 1.0, 1), DegenerateTimePartition);
}

TEST_CASE("g L1 norm is t^k / k!") {
    CHECK(g_l1_norm(0, 1.0) == doctest::Approx(1.0));
    CHECK(g_l1_norm(2, 1.0) == doctest::Approx(0.5));
    CHECK(g_l1_norm(3, 2.0) == doctest::Approx(8.0 / 6.0));
}

TEST_CASE("product_h composes v and V") {
    auto v = [](std::span<const double> z) { return z[0]; };
    auto V = [](std::span<const double> z) { return z[0] * z[0]; };
    // k=0: empty product, v only
    std::vector<double> single{3.0};
    CHECK(product_h(kOne, V, single, 0, 1) == doctest::Approx(1.0));
    // k=1: V(z1) * v(z2) with z1=2, z2=3 -> 4 * 3
    std::vector<double> pts{2.0, 3.0};
    CHECK(product_h(v, V, pts, 1, 1) == doctest::Approx(12.0));
    // k=2 with constants
    auto c2 = [](std::span<const double>) { return 5.0; };
    std::vector<double> pts3{0.1, 0.2, 0.3};
    CHECK(product_h(kOne, c2, pts3, 2, 1) == doctest::Approx(25.0));

    auto bad = [](std::span<const double>) {
        return std::numeric_limits<double>::infinity();
    };
    CHECK_THROWS_AS(product_h(bad, V, single, 0, 1), InvalidInputFunction);
}

TEST_CASE("term k=0 for a Gaussian bump is the Gaussian convolution") {
    // integral exp(-z^2) N(0, t)(z) dz = (1 + 2t)^{-1/2}
    auto v = [](std::span<const double> z) { return std::exp(-z[0] * z[0]); };
    ProblemSpec s = make_spec(1, 1.0, v, kOne);
    TermValue tv = term_reference_value(0, s, QuadSpec{8, 40});
    CHECK(tv.value == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-8));
    CHECK(tv.error_estimate < 1e-6);
}

TEST_CASE("constant potential terms are c^k t^k / k!") {
    // constants make every quadrature exact; tiny rules suffice
    for (double c : {0.5, -0.25}) {
        auto V = [c](std::span<const double>) { return c; };
        ProblemSpec s = make_spec(1, 1.0, kOne, V);
        for (int k : {1, 2, 3}) {
            TermValue tv = term_reference_value(k, s, QuadSpec{4, 4});
            double expect = g_l1_norm(k, 1.0) * std::pow(c, k);
            CHECK(tv.value == doctest::Approx(expect).epsilon(1e-6));
        }
    }
}

TEST_CASE("partial sums for constant potential approach e^{ct}") {
    const double c = 0.25;
    auto V = [](std::span<const double>) { return 0.25; };
    ProblemSpec s = make_spec(1, 1.0, kOne, V);
    double sum = 0.0;
    double prev_gap = 1.0;
    for (int k = 0; k <= 3; ++k) {
        sum += term_reference_value(k, s, QuadSpec{4, 4}).value;
        double gap = std::abs(std::exp(c) - sum);
        CHECK(gap < prev_gap);  // geometric-over-factorial tail
        prev_gap = gap;
    }
    CHECK(sum == doctest::Approx(std::exp(c)).epsilon(2e-4));
}

TEST_CASE("oracle dimension cap") {
    ProblemSpec s = make_spec(2, 1.0, kOne, kOne);
    CHECK_THROWS_AS(term_reference_value(3, s), OracleDimensionLimit);  // 8 dims
    CHECK_NOTHROW(term_reference_value(2, s, QuadSpec{3, 4}));          // 6 dims
}
