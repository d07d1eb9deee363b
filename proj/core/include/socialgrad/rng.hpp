#pragma once

#include <cstdint>
#include <random>

namespace socialgrad {

// SplitMix64 finalizer, used to derive independent per-run seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Portable random stream: std::mt19937_64 (output fully specified by the
// standard) with a hand-rolled double conversion, since the standard
// distributions are implementation-defined. stream(seed, k) gives run k its
// own generator so results do not depend on scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(seed ^ splitmix64(index + 1)));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace socialgrad
