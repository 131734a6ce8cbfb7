/*
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace nsk {

inline std::size_t default_workers() {
  static std::size_t n = [] {
    if (const char* env = std::getenv("NSK_WORKERS")) {
      long v = std::atol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return static_cast<std::size_t>(hc ? hc : 1);
  }();
  return n;
}

/// Runs fn(i) for i in [0, n) across workers. Work stealing via an atomic
/// cursor; callers own any ordering of result writes (index-addressed).
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t n_threads = 0) {
  if (n_threads == 0) n_threads = default_workers();
  if (n_threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (auto& th : threads) th.join();
}

}  // namespace nsk
