#pragma once

// Counter-based random streams (Philox4x32-10). A stream is identified by
// (seed, stream_id); distinct stream ids give statistically independent
// sequences, and any block of the sequence can be generated from its counter
// alone. This is what makes batch sampling reproducible independent of the
// number of worker threads: sample i always draws from substream(i).

#include <array>
#include <cstdint>

namespace fk {

namespace rng_detail {
std::uint64_t splitmix64(std::uint64_t x);
}

struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;

    // Derived stream, statistically independent of this one for distinct i.
    [[nodiscard]] RngStream substream(std::uint64_t i) const;

    // Raw 128-bit block for counter `ctr`.
    [[nodiscard]] std::array<std::uint32_t, 4> block(std::uint64_t ctr) const;
};

// Stateful cursor over a stream: sequential uniforms and normals.
class RngSequence {
public:
    explicit RngSequence(RngStream s) : stream_(s) {}

    // Uniform on (0, 1).
    double next_uniform();

    // Standard normal (Box-Muller; generated in pairs).
    double next_normal();

    const RngStream& stream() const { return stream_; }

private:
    void refill();

    RngStream stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int avail_ = 0;          // 32-bit words left in buf_
    double cached_normal_ = 0.0;
    bool have_cached_ = false;
};

// Fixed purpose tags used to derive non-colliding stream families.
namespace stream_purpose {
inline constexpr std::uint64_t monte_carlo = 0x11;
inline constexpr std::uint64_t quantum_samples = 0x22;
inline constexpr std::uint64_t quantum_outcomes = 0x33;
inline constexpr std::uint64_t probes = 0x44;
inline constexpr std::uint64_t cv_precompute = 0x55;
inline constexpr std::uint64_t dense_path = 0x66;
inline constexpr std::uint64_t validation = 0x77;
} // namespace stream_purpose

// Root stream for a (seed, purpose, term k, replicate) combination.
RngStream make_stream(std::uint64_t seed, std::uint64_t purpose,
                      std::uint64_t k, std::uint64_t replicate);

} // namespace fk
