#include "fk/sampler.hpp"

#include "fk/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fk {

PathSample sample_path(int k, double t, int d, RngStream stream) {
    if (k < 0) throw std::invalid_argument("sample_path: k >= 0 required");
    if (t <= 0.0) throw std::invalid_argument("sample_path: t > 0 required");
    if (d < 1) throw std::invalid_argument("sample_path: d >= 1 required");

    PathSample s;
    s.k = k;
    s.times.resize(k);
    s.points.resize(static_cast<std::size_t>(k + 1) * d);

    RngSequence seq(stream);
    if (k > 0) {
        // Sorted uniforms; ties are measure-zero but re-drawn for safety.
        for (int attempt = 0; attempt < 64; ++attempt) {
            for (int i = 0; i < k; ++i) s.times[i] = t * seq.next_uniform();
            std::sort(s.times.begin(), s.times.end());
            bool tie = false;
            for (int i = 1; i < k; ++i)
                if (s.times[i] == s.times[i - 1]) tie = true;
            if (!tie) break;
        }
    }
    for (int seg = 0; seg <= k; ++seg) {
        double lo = seg == 0 ? 0.0 : s.times[seg - 1];
        double hi = seg == k ? t : s.times[seg];
        double sd = std::sqrt(hi - lo);
        for (int c = 0; c < d; ++c) {
            double prev = seg == 0 ? 0.0 : s.points[(seg - 1) * d + c];
            s.points[seg * d + c] = prev + sd * seq.next_normal();
        }
    }
    return s;
}

std::vector<PathSample> sample_batch(int k, double t, int d, std::size_t m,
                                     RngStream base) {
    std::vector<PathSample> out(m);
    parallel_for(m, kDefaultChunk, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            out[i] = sample_path(k, t, d, base.substream(i));
    });
    return out;
}

} // namespace fk
