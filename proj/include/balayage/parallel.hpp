#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace balayage {

/// Worker count: BALAYAGE_THREADS when set to a positive integer, otherwise
/// the hardware concurrency.
int thread_count();

/// Runs f(i) for i in [0, n) over contiguous chunks. Each index is handled by
/// exactly one worker, so results written per index are deterministic.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n / 64 + 1);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &f] {
      for (std::size_t i = lo; i < hi; ++i) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace balayage
