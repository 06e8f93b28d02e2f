#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace trafficgp {

// Deterministic random helpers on top of mt19937_64. The standard
// distributions are implementation-defined, so draws go through these
// fixed mappings to keep seeded runs byte-identical across toolchains.

inline double uniform01(std::mt19937_64 &rng) {
  // 53-bit mantissa in [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64 &rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Unbiased index in [0, n) via rejection sampling.
inline std::size_t uniform_index(std::mt19937_64 &rng, std::size_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

/// Standard normal draw (Box-Muller, no cached spare).
inline double normal(std::mt19937_64 &rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// Stream-splitting: derive an independent child seed from (seed, tags).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0) {
  // splitmix64 finalizer over the mixed words
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (a + 1) +
                    0xbf58476d1ce4e5b9ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace trafficgp
