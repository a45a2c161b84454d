#pragma once

// Minimal deterministic work-sharing helper. Work is split into fixed-size
// chunks whose boundaries do not depend on the worker count, so any code
// that writes to disjoint per-index slots produces identical buffers for
// 1 or N threads.

#include <cstddef>
#include <functional>

namespace fk {

// Global cap on worker threads (0 = hardware concurrency). Set from the CLI
// --threads flag; affects speed only, never results.
void set_max_threads(int n);
int max_threads();

inline constexpr std::size_t kDefaultChunk = 8192;

// Invokes fn(begin, end) over chunked subranges of [0, n).
void parallel_for(std::size_t n, std::size_t chunk,
                  const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace fk
