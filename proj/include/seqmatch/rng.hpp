#pragma once

#include <cstdint>
#include <vector>

namespace seqmatch {

// seqmatch-rng-v1: xoshiro256++ seeded through SplitMix64.
//
// The raw 64-bit stream and the uniform doubles derived from it are exact
// integer/IEEE-754 arithmetic, so identical seeds give identical streams on
// every platform. normal() goes through libm (log/cos) and is deterministic
// per platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53 random mantissa bits.
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller; consumes exactly two raw draws per call.
  double normal();
  // Uniform index in [0, n), rejection-sampled so every value is equally
  // likely. n must be nonzero.
  std::size_t index(std::size_t n);

  // Derives an independent generator for a named sub-stream.
  Rng fork(std::uint64_t tag) const;

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = index(i + 1);
      using std::swap;
      swap(v[i], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace seqmatch
