#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mixedbo {

// Stateless seed mixing (splitmix64). Used to derive independent streams
// from a base seed without sharing generator state across workers.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives a substream seed: mixes the base seed with one or two stream tags.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag_a,
                                 std::uint64_t tag_b = 0) {
  return splitmix64(splitmix64(base ^ splitmix64(tag_a)) ^ splitmix64(~tag_b));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

// Canonical uniform in [0, 1) with 53 random bits. Implementation-defined
// stdlib distributions are avoided so draws are identical across platforms.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Marsaglia polar method over canonical uniforms (stdlib normal_distribution
// is not portable across library versions).
inline double normal01(Rng& rng) {
  for (;;) {
    const double u = 2.0 * uniform01(rng) - 1.0;
    const double v = 2.0 * uniform01(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

}  // namespace mixedbo
