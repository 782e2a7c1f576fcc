#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace ldsplan {

/// Runs body(i) for i in [0, count) on up to `threads` workers using static
/// contiguous blocks. Callers write results into per-index slots so the
/// outcome does not depend on the thread count.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t block = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * block;
    const std::size_t hi = std::min(count, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

/// Thread count from LDSPLAN_THREADS, or 1 when unset or unparsable.
unsigned default_thread_count();

}  // namespace ldsplan
