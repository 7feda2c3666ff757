#pragma once

#include <cstdint>

namespace streamcqr {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: draw k is splitmix64(key + k * golden). Children get independent keys.
class CounterRng {
public:
  explicit constexpr CounterRng(std::uint64_t seed) noexcept : key_(splitmix64(seed)) {}

  std::uint64_t next_u64() noexcept { return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * counter_++); }

  /// Uniform in the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  CounterRng child(std::uint64_t stream) const noexcept {
    return CounterRng(key_ ^ splitmix64(stream + 0xD1B54A32D192ED03ULL));
  }

  std::uint64_t counter() const noexcept { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace streamcqr
