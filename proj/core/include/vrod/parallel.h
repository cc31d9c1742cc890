#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace vrod {

/// Worker count for parallelizable phases: the VROD_THREADS environment
/// variable when set (clamped to [1, hardware]), otherwise 1.
inline int thread_count() {
  static const int cached = [] {
    const char* env = std::getenv("VROD_THREADS");
    if (!env) return 1;
    const int parsed = std::atoi(env);
    const int hw = std::max(1u, std::thread::hardware_concurrency());
    return std::clamp(parsed, 1, hw);
  }();
  return cached;
}

/// Runs fn(i) for i in [0, n) on `threads` workers in contiguous chunks.
/// Results must go to index-addressed storage so the outcome is independent
/// of scheduling.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int begin = t * chunk;
    const int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn] {
      for (int i = begin; i < end; ++i) fn(i);
    });
  }
  for (std::thread& th : pool) th.join();
}

}  // namespace vrod
