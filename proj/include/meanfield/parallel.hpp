#pragma once

#include <cstddef>
#include <functional>

namespace meanfield {

// Number of worker threads: hardware concurrency, capped by the
// MEANFIELD_THREADS environment variable when set (minimum 1).
std::size_t worker_count();

// Runs fn(i) for i in [0, n) split into contiguous chunks across workers.
// Each index is processed exactly once and writes only to its own output
// slot, so results are independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn);

}  // namespace meanfield
