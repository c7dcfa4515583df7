#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace cmcwb {

// Deterministic chunked parallel loop: fn(i) for i in [0, n). Work items must
// write disjoint locations. threads <= 1 runs inline.
inline void parallel_for(long n, const std::function<void(long)>& fn, int threads = 1) {
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<long>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (long i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Process-wide default used by grid sweeps; set from the CLI --threads flag.
inline std::atomic<int>& detail_thread_count() noexcept {
  static std::atomic<int> count{1};
  return count;
}
inline int default_thread_count() noexcept { return detail_thread_count().load(); }
inline void set_default_thread_count(int threads) noexcept {
  detail_thread_count().store(threads < 1 ? 1 : threads);
}

}  // namespace cmcwb
