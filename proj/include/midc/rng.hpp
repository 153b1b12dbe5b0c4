#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace midc {

/// Identifier written into output metadata.
inline constexpr std::string_view kRngName = "splitmix64-counter/box-muller";

/// Stream purposes; the numeric values are part of the output contract.
enum class RngPurpose : std::uint64_t {
  kSystem = 1,
  kInitialState = 2,
  kProcessNoise = 3,
  kInstance = 4,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: every draw is a pure function of
/// (seed, trial, purpose, particle, time, counter), so results do not depend
/// on evaluation order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t trial, RngPurpose purpose,
             std::uint64_t particle = 0, std::uint64_t time = 0) {
    key_ = splitmix64(seed);
    key_ = splitmix64(key_ ^ trial);
    key_ = splitmix64(key_ ^ static_cast<std::uint64_t>(purpose));
    key_ = splitmix64(key_ ^ particle);
    key_ = splitmix64(key_ ^ time);
  }

  std::uint64_t bits(std::uint64_t counter) const {
    return splitmix64(key_ ^ splitmix64(counter));
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  double uniform(std::uint64_t counter, double lo, double hi) const {
    return lo + (hi - lo) * uniform(counter);
  }

  /// Standard normal number `index` of this stream (Box-Muller, cosine
  /// branch, two counters per draw).
  double normal(std::uint64_t index) const {
    const double u1 = 1.0 - uniform(2 * index);  // (0, 1]
    const double u2 = uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_ = 0;
};

}  // namespace midc
