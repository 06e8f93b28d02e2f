#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace trafficgp {

/// Run fn(0..n_jobs) on a bounded pool. Jobs must write to disjoint slots;
/// results are position-addressed, so scheduling order cannot leak into
/// the output.
inline void parallel_for(std::size_t n_jobs, int threads,
                         const std::function<void(std::size_t)> &fn) {
  if (threads <= 1 || n_jobs <= 1) {
    for (std::size_t i = 0; i < n_jobs; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_jobs) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min<std::size_t>(threads, n_jobs);
  pool.reserve(count);
  for (int i = 0; i < count; ++i) pool.emplace_back(worker);
  for (auto &t : pool) t.join();
}

} // namespace trafficgp
