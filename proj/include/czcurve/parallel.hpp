// Deterministic data-parallel loops.
//
// Work is split over indices; each task writes only its own slots, reductions
// happen sequentially afterwards, so results do not depend on the thread
// count. CZCURVE_THREADS caps the pool (0 or unset = hardware concurrency).
#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace czcurve {

inline unsigned thread_budget() {
  static const unsigned cached = [] {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("CZCURVE_THREADS")) {
      long v = std::strtol(env, nullptr, 10);
      if (v > 0) return static_cast<unsigned>(v);
    }
    return hw;
  }();
  return cached;
}

/// Runs fn(i) for i in [0, n). fn must only touch state owned by index i.
template <typename F>
void parallel_for(std::size_t n, F&& fn) {
  unsigned nt = thread_budget();
  if (nt <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  if (nt > n) nt = static_cast<unsigned>(n);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (unsigned t = 0; t < nt; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += nt) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace czcurve
