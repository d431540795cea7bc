#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace formlab {

// Worker cap: FORMATION_LAB_THREADS when set, hardware concurrency otherwise.
inline int worker_count(int items) {
  int cap = static_cast<int>(std::thread::hardware_concurrency());
  if (cap < 1) cap = 1;
  if (const char* env = std::getenv("FORMATION_LAB_THREADS")) {
    const int wanted = std::atoi(env);
    if (wanted >= 1) cap = wanted;
  }
  return std::max(1, std::min(cap, items));
}

// Runs fn(i) for i in [0, items). Each index writes only its own outputs,
// so splitting across threads cannot change any result; reductions happen
// afterwards in index order.
inline void parallel_for(int items, const std::function<void(int)>& fn) {
  const int workers = worker_count(items);
  if (workers <= 1) {
    for (int i = 0; i < items; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < items; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace formlab
