#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fk/kernels.hpp"
#include "fk/rng.hpp"

#include <cmath>
#include <limits>
#include <vector>

using namespace fk;

namespace {

std::vector<double> random_values(std::size_t n, double lo, double hi, std::uint64_t seed) {
    RngSequence seq(RngStream{seed, 7});
    std::vector<double> v(n);
    for (auto& x : v) x = lo + (hi - lo) * seq.next_uniform();
    return v;
}

struct BackendGuard {
    ~BackendGuard() { kernels::reset_backend(); }
};

} // namespace

TEST_CASE("scalar reductions match plain loops") {
    BackendGuard g;
    kernels::force_backend(kernels::Backend::scalar);
    auto x = random_values(1003, -2.0, 3.0, 11);
    double ref = 0.0, ref2 = 0.0;
    for (double v : x) {
        ref += v;
        ref2 += v * v;
    }
    CHECK(kernels::reduce_sum(x.data(), x.size()) == doctest::Approx(ref).epsilon(1e-13));
    double s, q;
    kernels::sum_sumsq(x.data(), x.size(), s, q);
    CHECK(s == doctest::Approx(ref).epsilon(1e-13));
    CHECK(q == doctest::Approx(ref2).epsilon(1e-13));
}

TEST_CASE("avx2 variants agree with scalar reference") {
    if (!kernels::avx2_available()) return;  // nothing to compare on this CPU
    BackendGuard g;

    for (std::size_t n : {std::size_t(1), std::size_t(5), std::size_t(64),
                          std::size_t(1001), std::size_t(100000)}) {
        auto x = random_values(n, -4.0, 4.0, 100 + n);
        auto y = random_values(n, -1.0, 1.0, 200 + n);

        kernels::force_backend(kernels::Backend::scalar);
        double s_sum = kernels::reduce_sum(x.data(), n);
        double s_dot = kernels::dot(x.data(), y.data(), n);
        double s_s, s_q;
        kernels::sum_sumsq(x.data(), n, s_s, s_q);
        std::vector<double> s_axpy = y;
        kernels::axpy(0.37, x.data(), s_axpy.data(), n);
        std::vector<double> s_acc(n, 0.5);
        kernels::accumulate_sq(x.data(), s_acc.data(), n);
        std::vector<double> s_exp(n);
        kernels::vexp(x.data(), s_exp.data(), n);

        kernels::force_backend(kernels::Backend::avx2);
        CHECK(kernels::reduce_sum(x.data(), n) == doctest::Approx(s_sum).epsilon(1e-12));
        CHECK(kernels::dot(x.data(), y.data(), n) == doctest::Approx(s_dot).epsilon(1e-12));
        double a_s, a_q;
        kernels::sum_sumsq(x.data(), n, a_s, a_q);
        CHECK(a_s == doctest::Approx(s_s).epsilon(1e-12));
        CHECK(a_q == doctest::Approx(s_q).epsilon(1e-12));
        std::vector<double> a_axpy = y;
        kernels::axpy(0.37, x.data(), a_axpy.data(), n);
        std::vector<double> a_acc(n, 0.5);
        kernels::accumulate_sq(x.data(), a_acc.data(), n);
        std::vector<double> a_exp(n);
        kernels::vexp(x.data(), a_exp.data(), n);
        for (std::size_t i = 0; i < n; i += std::max<std::size_t>(1, n / 64)) {
            CHECK(a_axpy[i] == doctest::Approx(s_axpy[i]).epsilon(1e-13));
            CHECK(a_acc[i] == doctest::Approx(s_acc[i]).epsilon(1e-13));
            CHECK(a_exp[i] == doctest::Approx(s_exp[i]).epsilon(1e-13));
        }
    }
}

TEST_CASE("vexp matches std::exp across the useful range") {
    BackendGuard g;
    for (auto backend : {kernels::Backend::scalar, kernels::Backend::avx2}) {
        if (backend == kernels::Backend::avx2 && !kernels::avx2_available()) continue;
        kernels::force_backend(backend);
        auto x = random_values(20000, -700.0, 700.0, 42);
        x.push_back(0.0);
        x.push_back(-0.0);
        x.push_back(1.0);
        x.push_back(-36.0);
        std::vector<double> y(x.size());
        kernels::vexp(x.data(), y.data(), x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            double ref = std::exp(x[i]);
            CHECK(y[i] == doctest::Approx(ref).epsilon(5e-15));
        }
    }
}

TEST_CASE("vexp edge cases") {
    BackendGuard g;
    for (auto backend : {kernels::Backend::scalar, kernels::Backend::avx2}) {
        if (backend == kernels::Backend::avx2 && !kernels::avx2_available()) continue;
        kernels::force_backend(backend);
        double in[5] = {800.0, -800.0, std::numeric_limits<double>::infinity(),
                        -std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::quiet_NaN()};
        double out[5];
        kernels::vexp(in, out, 5);
        CHECK(std::isinf(out[0]));
        CHECK(out[1] == 0.0);
        CHECK(std::isinf(out[2]));
        CHECK(out[3] == 0.0);
        CHECK(std::isnan(out[4]));
    }
}

TEST_CASE("sample_variance is the unbiased estimator") {
    BackendGuard g;
    std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    // mean 2.5, sum of squared deviations 5, /3
    CHECK(kernels::sample_variance(x.data(), 4) == doctest::Approx(5.0 / 3.0));
    CHECK(kernels::sample_variance(x.data(), 1) == 0.0);
}
