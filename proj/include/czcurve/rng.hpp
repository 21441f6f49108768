// Counter-based splittable random number generator.
//
// Every stream is a pure function of (key, counter), so parallel consumers
// can draw from disjoint child streams without locks and a run is fully
// determined by the root seed.
#pragma once

#include <cstdint>

namespace czcurve {

namespace detail {
// SplitMix64 finalizer (Stafford variant 13).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t key = 0) : key_(key) {}

  std::uint64_t next_u64() { return detail::mix64(key_ ^ (0xa0761d6478bd642fULL * ++ctr_)); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

  /// Child stream; independent of the parent's future draws.
  Rng split(std::uint64_t tag) const { return Rng(detail::mix64(key_ ^ detail::mix64(tag ^ 0x5851f42d4c957f2dULL))); }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t ctr_ = 0;
};

}  // namespace czcurve
