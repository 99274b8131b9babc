#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace screenopt {

/// Worker count: SCREENOPT_THREADS when set and positive, else hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("SCREENOPT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Splits [0, n) into contiguous chunks, one per worker, and calls fn(chunk, begin, end).
/// Chunk boundaries depend only on n and the worker count, so reductions that
/// merge per-chunk results in chunk order are reproducible.
inline std::size_t parallel_chunks(std::size_t n,
                                   const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), std::max<std::size_t>(n, 1));
  const std::size_t step = (n + workers - 1) / workers;
  if (workers <= 1) {
    fn(0, 0, n);
    return 1;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t c = 0; c < workers; ++c) {
    const std::size_t b = std::min(n, c * step);
    const std::size_t e = std::min(n, b + step);
    pool.emplace_back([&fn, c, b, e] { fn(c, b, e); });
  }
  for (auto& t : pool) t.join();
  return workers;
}

}  // namespace screenopt
