#pragma once

// Chunked parallel-for over an index range plus a reduction helper with two
// modes: deterministic (partials merged in fixed chunk order) and fast
// (merged in completion order under a mutex).

#include <algorithm>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace quaffure {

inline void parallel_for(std::int64_t n, int threads,
                         const std::function<void(std::int64_t, std::int64_t)>& body) {
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    body(0, n);
    return;
  }
  const int workers = static_cast<int>(std::min<std::int64_t>(threads, n));
  const std::int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    const std::int64_t lo = t * chunk;
    const std::int64_t hi = std::min<std::int64_t>(lo + chunk, n);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

// Reduces per-chunk partial sums produced by `partial(lo, hi)`.
inline double parallel_reduce(std::int64_t n, int threads, bool deterministic,
                              const std::function<double(std::int64_t, std::int64_t)>& partial) {
  if (n <= 0) return 0.0;
  if (threads <= 1 || n == 1) return partial(0, n);

  const int workers = static_cast<int>(std::min<std::int64_t>(threads, n));
  const std::int64_t chunk = (n + workers - 1) / workers;

  if (deterministic) {
    std::vector<double> partials(workers, 0.0);
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
      const std::int64_t lo = t * chunk;
      const std::int64_t hi = std::min<std::int64_t>(lo + chunk, n);
      if (lo >= hi) break;
      pool.emplace_back([&partial, &partials, t, lo, hi] { partials[t] = partial(lo, hi); });
    }
    for (auto& th : pool) th.join();
    double total = 0.0;
    for (double p : partials) total += p;  // fixed order
    return total;
  }

  double total = 0.0;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) {
    const std::int64_t lo = t * chunk;
    const std::int64_t hi = std::min<std::int64_t>(lo + chunk, n);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      const double p = partial(lo, hi);
      std::lock_guard<std::mutex> lock(mu);
      total += p;
    });
  }
  for (auto& th : pool) th.join();
  return total;
}

}  // namespace quaffure
