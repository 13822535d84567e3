#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sparselaw {

// splitmix64. Small, seedable, and identical on every platform, unlike the
// distributions in <random>. Used for start sampling and simulation noise.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in (0, 1].
  double next_unit() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes two uniforms.
  double next_normal() {
    const double u1 = next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double next_log_uniform(double lo, double hi) {
    return lo * std::exp(next_unit() * std::log(hi / lo));
  }
};

// Mixes a seed with a stream index so per-record streams are independent of
// generation order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 rng(seed ^ (0x9e3779b97f4a7c15ull + stream * 0xd1b54a32d192ed03ull));
  return rng.next();
}

}  // namespace sparselaw
