#include "triplane/threads.hpp"

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace triplane {

unsigned worker_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("TRIPLANE_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n >= 1)
      return static_cast<unsigned>(std::min<long>(n, hw));
  }
  return hw;
}

void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
  const unsigned workers = static_cast<unsigned>(
      std::min<size_t>(worker_threads(), n == 0 ? 1 : n));
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) {
    const size_t lo = n * t / workers, hi = n * (t + 1) / workers;
    pool.emplace_back([&fn, lo, hi] {
      for (size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace triplane
