#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace ragfce {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. fn must not throw.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  if (workers == 1) {
    run();
    return;
  }
  std::vector<std::jthread> threads;
  threads.reserve(workers - 1);
  for (std::size_t k = 0; k + 1 < workers; ++k) threads.emplace_back(run);
  run();
}

}  // namespace ragfce
