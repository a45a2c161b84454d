// AVX2 kernel variants. Compiled with -mavx2 -mfma on x86-64; selected at
// runtime only when the CPU reports both features. Reductions keep the same
// 4-lane structure as the scalar reference so results agree to rounding.

#if defined(FK_HAVE_AVX2_KERNELS)

#include <cstddef>
#include <cstdint>
#include <cmath>
#include <immintrin.h>

namespace fk::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    // fixed combine order: (l0+l1) + (h0+h1)
    __m128d lo_sum = _mm_add_sd(lo, _mm_unpackhi_pd(lo, lo));
    __m128d hi_sum = _mm_add_sd(hi, _mm_unpackhi_pd(hi, hi));
    return _mm_cvtsd_f64(_mm_add_sd(lo_sum, hi_sum));
}

} // namespace

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i];
    return s + tail;
}

void sum_sumsq(const double* x, std::size_t n, double& sum_out, double& sumsq_out) {
    __m256d s = _mm256_setzero_pd();
    __m256d q = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        s = _mm256_add_pd(s, v);
        q = _mm256_fmadd_pd(v, v, q);
    }
    double st = 0.0, qt = 0.0;
    for (; i < n; ++i) {
        st += x[i];
        qt += x[i] * x[i];
    }
    sum_out = hsum(s) + st;
    sumsq_out = hsum(q) + qt;
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double s = hsum(acc);
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return s + tail;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void accumulate_sq(const double* x, double* acc, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        __m256d va = _mm256_loadu_pd(acc + i);
        _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(v, v, va));
    }
    for (; i < n; ++i) acc[i] += x[i] * x[i];
}

namespace {

// Same reduction and polynomial as the scalar exp_one.
constexpr double kLog2E = 1.4426950408889634074;
constexpr double kLn2Hi = 6.93145751953125e-1;
constexpr double kLn2Lo = 1.42860682030941723212e-6;
constexpr double kExpOverflow = 709.782712893384;
constexpr double kExpUnderflow = -708.396418532264;

inline __m256d exp4(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(kLog2E);
    const __m256d ln2hi = _mm256_set1_pd(kLn2Hi);
    const __m256d ln2lo = _mm256_set1_pd(kLn2Lo);

    __m256d xc = _mm256_min_pd(x, _mm256_set1_pd(kExpOverflow));
    xc = _mm256_max_pd(xc, _mm256_set1_pd(kExpUnderflow));

    __m256d nf = _mm256_round_pd(_mm256_mul_pd(xc, log2e),
                                 _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(nf, ln2hi, xc);
    r = _mm256_fnmadd_pd(nf, ln2lo, r);

    __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

    // scale by 2^n through the exponent bits
    __m128i n32 = _mm256_cvtpd_epi32(nf);
    __m256i n64 = _mm256_cvtepi32_epi64(n32);
    __m256i bits = _mm256_castpd_si256(p);
    bits = _mm256_add_epi64(bits, _mm256_slli_epi64(n64, 52));
    __m256d result = _mm256_castsi256_pd(bits);

    // saturate the clamped lanes and propagate NaN
    __m256d inf = _mm256_set1_pd(INFINITY);
    __m256d over = _mm256_cmp_pd(x, _mm256_set1_pd(kExpOverflow), _CMP_GT_OQ);
    __m256d under = _mm256_cmp_pd(x, _mm256_set1_pd(kExpUnderflow), _CMP_LT_OQ);
    __m256d isnan = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
    result = _mm256_blendv_pd(result, inf, over);
    result = _mm256_blendv_pd(result, _mm256_setzero_pd(), under);
    result = _mm256_blendv_pd(result, x, isnan);
    return result;
}

inline double exp_one_tail(double x) {
    if (std::isnan(x)) return x;
    if (x > kExpOverflow) return INFINITY;
    if (x < kExpUnderflow) return 0.0;
    alignas(32) double in[4] = {x, 0.0, 0.0, 0.0};
    alignas(32) double out[4];
    _mm256_store_pd(out, exp4(_mm256_load_pd(in)));
    return out[0];
}

} // namespace

void vexp(const double* x, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, exp4(_mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] = exp_one_tail(x[i]);
}

} // namespace fk::kernels::avx2

#endif // FK_HAVE_AVX2_KERNELS
