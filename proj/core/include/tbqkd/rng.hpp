#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace tbqkd {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Used both as the generator
// step and as the seed-mixing hash of the substream contract, see README.
constexpr std::uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Deterministic pseudorandom stream: SplitMix64 sequence with Box-Muller
/// gaussians. Every Monte Carlo consumer owns one stream per trial/round so
/// results do not depend on scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kSplitMixGamma;
    return splitmix64_mix(state_);
  }

  /// Uniform in [0, 1), 53-bit mantissa.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the pair's second value is cached.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    const double v = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double theta = 2.0 * std::numbers::pi * v;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  bool next_bernoulli(double p) { return next_unit() < p; }

  int next_bit() { return static_cast<int>(next_u64() >> 63); }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Reproducible substream derivation: stream i of a factory scoped by a name
/// is a pure function of (master seed, name, i). Scheduling, thread count and
/// evaluation order never change the draws a given trial sees.
struct StreamFactory {
  std::uint64_t master = 0;

  /// Derive a child factory for an independent purpose ("visibility", "qkd:on:3", ...).
  [[nodiscard]] StreamFactory scoped(std::string_view name) const {
    return StreamFactory{splitmix64_mix(master ^ fnv1a64(name))};
  }

  /// Substream for one trial/round index.
  [[nodiscard]] RngStream stream(std::uint64_t index) const {
    return RngStream(splitmix64_mix(master ^ ((index + 1) * kSplitMixGamma)));
  }
};

}  // namespace tbqkd
