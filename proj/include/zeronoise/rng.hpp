#pragma once

// Counter-based random streams. A stream is keyed by (seed, index, lane) and
// its n-th output is a pure function of the key and n, so results do not
// depend on how work is split across threads.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace zeronoise {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// Lanes separate independent uses of the same (seed, index) pair.
enum class Lane : std::uint64_t { noise = 1, initial = 2, sampling = 3, subsample = 4 };

class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::uint64_t index, Lane lane = Lane::noise)
      : key_(mix64(mix64(seed + kGolden) ^ (index * kGolden + static_cast<std::uint64_t>(lane)))) {}

  std::uint64_t next_u64() { return mix64(key_ + (counter_++) * kGolden); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Two independent standard normals (Box-Muller).
  std::pair<double, double> normal_pair() {
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

  std::uint64_t counter() const { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

} // namespace zeronoise
