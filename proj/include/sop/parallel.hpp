#pragma once

// Deterministic fork-join over an index range. Each index writes into its own
// result slot, so the output is independent of the number of workers and of
// scheduling; aggregation happens sequentially afterwards.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace sop {

inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& body) {
  if (threads < 1) threads = 1;
  const int workers = static_cast<int>(std::min<std::size_t>(threads, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        body(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

// Order-independent mean via compensated (Neumaier) summation of a
// pre-materialized value array. The Neumaier variant keeps the correction
// even when the running sum is smaller than the incoming term.
inline double compensated_mean(const std::vector<double>& values) {
  double sum = 0.0, c = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::fabs(sum) >= std::fabs(v))
      c += (sum - t) + v;
    else
      c += (v - t) + sum;
    sum = t;
  }
  return values.empty() ? 0.0 : (sum + c) / static_cast<double>(values.size());
}

}  // namespace sop
