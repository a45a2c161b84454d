#include "fk/rng.hpp"

#include <cmath>

namespace fk {

namespace rng_detail {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

// Philox4x32-10 round function.
constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::uint32_t c[4], std::uint32_t k0, std::uint32_t k1) {
    std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
    std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
    std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    std::uint32_t out[4];
    out[0] = hi1 ^ c[1] ^ k0;
    out[1] = lo1;
    out[2] = hi0 ^ c[3] ^ k1;
    out[3] = lo0;
    c[0] = out[0];
    c[1] = out[1];
    c[2] = out[2];
    c[3] = out[3];
}

} // namespace
} // namespace rng_detail

RngStream RngStream::substream(std::uint64_t i) const {
    using rng_detail::splitmix64;
    RngStream out;
    out.seed = seed;
    out.stream_id = splitmix64(stream_id ^ splitmix64(i + 0x51ed2701a9b3c602ULL));
    return out;
}

std::array<std::uint32_t, 4> RngStream::block(std::uint64_t ctr) const {
    std::uint32_t c[4] = {
        static_cast<std::uint32_t>(ctr),
        static_cast<std::uint32_t>(ctr >> 32),
        static_cast<std::uint32_t>(stream_id),
        static_cast<std::uint32_t>(stream_id >> 32),
    };
    std::uint32_t k0 = static_cast<std::uint32_t>(seed);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
    for (int round = 0; round < 10; ++round) {
        rng_detail::philox_round(c, k0, k1);
        k0 += rng_detail::kPhiloxW0;
        k1 += rng_detail::kPhiloxW1;
    }
    return {c[0], c[1], c[2], c[3]};
}

void RngSequence::refill() {
    buf_ = stream_.block(counter_++);
    avail_ = 4;
}

double RngSequence::next_uniform() {
    if (avail_ < 2) refill();
    std::uint64_t hi = buf_[4 - avail_];
    std::uint64_t lo = buf_[4 - avail_ + 1];
    avail_ -= 2;
    std::uint64_t bits = (hi << 32) | lo;
    double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
}

double RngSequence::next_normal() {
    if (have_cached_) {
        have_cached_ = false;
        return cached_normal_;
    }
    double u1 = next_uniform();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_normal_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
}

RngStream make_stream(std::uint64_t seed, std::uint64_t purpose,
                      std::uint64_t k, std::uint64_t replicate) {
    using rng_detail::splitmix64;
    std::uint64_t id = splitmix64(purpose ^ 0xA5A5A5A55A5A5A5AULL);
    id = splitmix64(id ^ splitmix64(k + 1));
    id = splitmix64(id ^ splitmix64(replicate + 0x9e02));
    return RngStream{seed, id};
}

} // namespace fk
