#pragma once
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace xtalk {

// Runs fn(i) for i in [0, n). Work items must be independent; results keyed by
// index, so output order does not depend on the job count.
inline void parallel_for(int jobs, std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  unsigned hw = std::thread::hardware_concurrency();
  int workers = std::min<std::size_t>(std::min<int>(jobs, hw ? int(hw) : 2), n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

inline int default_jobs() {
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? int(hw) : 1;
}

} // namespace xtalk
