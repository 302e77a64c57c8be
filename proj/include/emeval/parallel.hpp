#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace emeval {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Results must be
// written to per-index slots so the caller can reduce in a fixed order;
// that keeps every aggregate bit-identical across worker counts.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const unsigned t = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::vector<std::thread> threads;
  threads.reserve(t);
  for (unsigned w = 0; w < t; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += t) fn(i);
    });
  }
  for (auto& th : threads) th.join();
}

}  // namespace emeval
