#pragma once

#include <cmath>
#include <cstdint>

namespace extremal {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum class StreamTag : std::uint64_t {
  kPath = 1,
  kThetaOracle = 2,
  kTailChain = 3,
  kConditional = 4,
  kNormalSelfTest = 5,
};

// Independent 64-bit key for (master seed, replicate index, stream).
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replicate, StreamTag tag) {
  std::uint64_t h = mix64(master + kGolden);
  h = mix64(h ^ (static_cast<std::uint64_t>(tag) * 0xD6E8FEB86659FD93ULL));
  return mix64(h + (replicate + 1) * kGolden);
}

// Counter-based generator: the i-th output is mix64(key + i * golden), so a
// stream is fully determined by its key (SplitMix64).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
  }

  // Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Unit Frechet draw, P{Z <= z} = exp(-1/z).
inline double unit_frechet(CounterRng& rng) { return -1.0 / std::log(rng.uniform()); }

// Standard normal via Box-Muller (cosine branch only, one draw per call).
inline double standard_normal(CounterRng& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace extremal
