#include "fk/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace fk::kernels {

namespace detail {

// ---------------------------------------------------------------------------
// Scalar reference implementations. Reductions accumulate in 4 independent
// lanes and combine in a fixed order; the AVX2 variants use the same lane
// structure so the two backends agree closely (and each is deterministic).
// ---------------------------------------------------------------------------

double sum_scalar(const double* x, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += x[i];
        s1 += x[i + 1];
        s2 += x[i + 2];
        s3 += x[i + 3];
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i];
    return ((s0 + s1) + (s2 + s3)) + tail;
}

void sum_sumsq_scalar(const double* x, std::size_t n, double& sum, double& sumsq) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    double q0 = 0.0, q1 = 0.0, q2 = 0.0, q3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += x[i];     q0 += x[i] * x[i];
        s1 += x[i + 1]; q1 += x[i + 1] * x[i + 1];
        s2 += x[i + 2]; q2 += x[i + 2] * x[i + 2];
        s3 += x[i + 3]; q3 += x[i + 3] * x[i + 3];
    }
    double st = 0.0, qt = 0.0;
    for (; i < n; ++i) {
        st += x[i];
        qt += x[i] * x[i];
    }
    sum = ((s0 + s1) + (s2 + s3)) + st;
    sumsq = ((q0 + q1) + (q2 + q3)) + qt;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return ((s0 + s1) + (s2 + s3)) + tail;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void accumulate_sq_scalar(const double* x, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += x[i] * x[i];
}

// exp via Cody-Waite argument reduction and a degree-13 Taylor polynomial;
// |x| <= 0.3466 after reduction so the truncation error is below 1e-17.
// Shared constant set with the AVX2 variant.
constexpr double kLog2E = 1.4426950408889634074;
constexpr double kLn2Hi = 6.93145751953125e-1;
constexpr double kLn2Lo = 1.42860682030941723212e-6;
constexpr double kExpOverflow = 709.782712893384;
constexpr double kExpUnderflow = -708.396418532264;

double exp_one(double x) {
    if (std::isnan(x)) return x;
    if (x > kExpOverflow) return INFINITY;
    if (x < kExpUnderflow) return 0.0;
    double nf = std::nearbyint(x * kLog2E);
    double r = x - nf * kLn2Hi;
    r -= nf * kLn2Lo;
    // Horner evaluation of sum r^j / j!, j = 0..13
    double p = 1.0 / 6227020800.0;           // 1/13!
    p = p * r + 1.0 / 479001600.0;
    p = p * r + 1.0 / 39916800.0;
    p = p * r + 1.0 / 3628800.0;
    p = p * r + 1.0 / 362880.0;
    p = p * r + 1.0 / 40320.0;
    p = p * r + 1.0 / 5040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    auto n = static_cast<std::int64_t>(nf);
    std::uint64_t bits;
    std::memcpy(&bits, &p, sizeof bits);
    bits += static_cast<std::uint64_t>(n) << 52;
    double out;
    std::memcpy(&out, &bits, sizeof out);
    return out;
}

void vexp_scalar(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = exp_one(x[i]);
}

} // namespace detail

// AVX2 variants, defined in kernels_avx2.cpp (x86-64 builds only).
#if defined(FK_HAVE_AVX2_KERNELS)
namespace avx2 {
double sum(const double* x, std::size_t n);
void sum_sumsq(const double* x, std::size_t n, double& sum, double& sumsq);
double dot(const double* a, const double* b, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void accumulate_sq(const double* x, double* acc, std::size_t n);
void vexp(const double* x, double* y, std::size_t n);
} // namespace avx2
#endif

namespace {

struct Dispatch {
    double (*sum)(const double*, std::size_t) = detail::sum_scalar;
    void (*sum_sumsq)(const double*, std::size_t, double&, double&) = detail::sum_sumsq_scalar;
    double (*dot)(const double*, const double*, std::size_t) = detail::dot_scalar;
    void (*axpy)(double, const double*, double*, std::size_t) = detail::axpy_scalar;
    void (*accumulate_sq)(const double*, double*, std::size_t) = detail::accumulate_sq_scalar;
    void (*vexp)(const double*, double*, std::size_t) = detail::vexp_scalar;
};

Dispatch g_dispatch;
Backend g_backend = Backend::scalar;

bool cpu_has_avx2() {
#if defined(FK_HAVE_AVX2_KERNELS) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

void apply_backend(Backend b) {
    if (b == Backend::avx2) {
#if defined(FK_HAVE_AVX2_KERNELS)
        g_dispatch.sum = avx2::sum;
        g_dispatch.sum_sumsq = avx2::sum_sumsq;
        g_dispatch.dot = avx2::dot;
        g_dispatch.axpy = avx2::axpy;
        g_dispatch.accumulate_sq = avx2::accumulate_sq;
        g_dispatch.vexp = avx2::vexp;
#endif
    } else {
        g_dispatch = Dispatch{};
    }
    g_backend = b;
}

struct Init {
    Init() { reset_backend(); }
};

Init g_init;

} // namespace

Backend active_backend() { return g_backend; }

bool avx2_available() { return cpu_has_avx2(); }

void force_backend(Backend b) {
    if (b == Backend::avx2 && !avx2_available())
        throw std::invalid_argument("AVX2 kernels not available on this CPU/build");
    apply_backend(b);
}

void reset_backend() {
    Backend b = cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
    if (const char* env = std::getenv("FK_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) b = Backend::scalar;
        else if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) b = Backend::avx2;
    }
    apply_backend(b);
}

std::string backend_name(Backend b) {
    return b == Backend::avx2 ? "avx2" : "scalar";
}

double reduce_sum(const double* x, std::size_t n) { return g_dispatch.sum(x, n); }

void sum_sumsq(const double* x, std::size_t n, double& sum, double& sumsq) {
    g_dispatch.sum_sumsq(x, n, sum, sumsq);
}

double dot(const double* a, const double* b, std::size_t n) {
    return g_dispatch.dot(a, b, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    g_dispatch.axpy(a, x, y, n);
}

void accumulate_sq(const double* x, double* acc, std::size_t n) {
    g_dispatch.accumulate_sq(x, acc, n);
}

void vexp(const double* x, double* y, std::size_t n) { g_dispatch.vexp(x, y, n); }

double mean(const double* x, std::size_t n) {
    return n == 0 ? 0.0 : reduce_sum(x, n) / static_cast<double>(n);
}

double sample_variance(const double* x, std::size_t n) {
    if (n < 2) return 0.0;
    double s = 0.0, q = 0.0;
    sum_sumsq(x, n, s, q);
    double nn = static_cast<double>(n);
    double m = s / nn;
    double var = (q - nn * m * m) / (nn - 1.0);
    return var > 0.0 ? var : 0.0;
}

} // namespace fk::kernels
