#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace wavex {

/// Seeded random stream with a fully specified output sequence.
///
/// The engine is MT19937-64 (std::mt19937_64, whose output is fixed by the
/// C++ standard). Conversions to real values are done here rather than through
/// std::*_distribution, whose algorithms differ between standard libraries:
///   uniform01: (x >> 11) * 2^-53, in [0, 1)
///   normal:    Box-Muller on two uniforms, cosine branch only
/// so a (seed, call sequence) pair reproduces bit-identical values everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n)) % n;
  }

  double normal() {
    double u1 = uniform01();
    const double u2 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; derives independent sub-seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace wavex
