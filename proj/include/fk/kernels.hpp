#pragma once

// Low-level array kernels used by the hot loops (reductions, path stepping,
// batched exponentials). Each kernel has a scalar reference implementation
// and an AVX2 variant; the active backend is selected at runtime from CPU
// capabilities and can be overridden with force_backend() or the FK_KERNELS
// environment variable ("scalar" or "avx2").
//
// All kernels are deterministic for a fixed backend: reductions use a fixed
// accumulation order, so results do not depend on thread count (callers do
// the threading; kernels are single-threaded).

#include <cstddef>
#include <string>

namespace fk::kernels {

enum class Backend { scalar, avx2 };

// Backend active for subsequent kernel calls.
Backend active_backend();

// True if the CPU supports the AVX2 variants.
bool avx2_available();

// Force a specific backend (throws std::invalid_argument if unavailable).
void force_backend(Backend b);

// Re-run auto-detection (CPU features + FK_KERNELS env var).
void reset_backend();

std::string backend_name(Backend b);

// sum of x[0..n)
double reduce_sum(const double* x, std::size_t n);

// sum and sum of squares in one pass
void sum_sumsq(const double* x, std::size_t n, double& sum, double& sumsq);

// dot product
double dot(const double* a, const double* b, std::size_t n);

// y[i] += a * x[i]
void axpy(double a, const double* x, double* y, std::size_t n);

// acc[i] += x[i] * x[i]
void accumulate_sq(const double* x, double* acc, std::size_t n);

// y[i] = exp(x[i]); agrees with std::exp to a few ulp, underflows to 0
// below roughly -708 and overflows to +inf above roughly 709.8.
void vexp(const double* x, double* y, std::size_t n);

// Convenience wrappers.
double mean(const double* x, std::size_t n);

// Unbiased sample variance (n-1 denominator); returns 0 for n < 2.
double sample_variance(const double* x, std::size_t n);

} // namespace fk::kernels
