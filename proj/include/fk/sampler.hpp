#pragma once

// Sampling from the normalized weight density g_{k+1} / ||g_{k+1}||_L1:
// k sorted uniform times on (0, t) plus Brownian increments between them.

#include "fk/rng.hpp"

#include <vector>

namespace fk {

struct PathSample {
    int k = 0;
    std::vector<double> times;   // k sorted times in (0, t)
    std::vector<double> points;  // (k+1)*d coordinates, z_1 .. z_{k+1}
};

// One draw. Deterministic function of the stream; the stream is consumed
// sequentially (times first, then increments).
PathSample sample_path(int k, double t, int d, RngStream stream);

// m independent draws; sample i always uses base.substream(i), so the batch
// is bit-identical regardless of worker count.
std::vector<PathSample> sample_batch(int k, double t, int d, std::size_t m,
                                     RngStream base);

} // namespace fk
