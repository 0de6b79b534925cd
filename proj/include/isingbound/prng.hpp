#pragma once

#include <cstdint>

namespace isingbound {

// Deterministic 64-bit generator (splitmix64).  Every draw advances the
// state by a fixed odd constant and mixes it:
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// This recurrence is the reproducibility contract: any implementation that
// follows it, in any language, replays the same stream for the same seed.
// All randomized pieces of the library (model generators, sampling) draw
// from this generator only, so results are platform-independent.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1): the top 53 bits scaled by 2^-53.
  double uniform01() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  // Uniform integer in [0, bound).  Plain modulo reduction, kept for
  // cross-language reproducibility; the bias is negligible for the small
  // bounds used here (shuffles over at most a few hundred stubs).
  std::uint64_t below(std::uint64_t bound) { return next() % bound; }

 private:
  std::uint64_t state_;
};

}  // namespace isingbound
