#pragma once

#include <cstddef>
#include <functional>

namespace triplane {

// Worker cap: min(TRIPLANE_THREADS, hardware_concurrency), at least 1.
// Unset or invalid TRIPLANE_THREADS means "use all logical cores".
unsigned worker_threads();

// Runs fn(0..n-1) across worker_threads() threads in contiguous chunks.
// fn must only write state owned by index i, which keeps results identical
// to the serial order regardless of the thread count.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace triplane
