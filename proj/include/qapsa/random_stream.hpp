#pragma once

#include <cstdint>

namespace qapsa {

/// Stateless counter-based uniform generator.
///
/// `uniform(k)` depends only on (seed, k), so any proposal's random draw can be
/// computed out of order by any worker. Index layout used by the solver:
///   k in [0, I)            annealing iteration k
///   k in [-N, -1]          initial Fisher-Yates shuffle
///   k >= kTemperatureProbeBase  pair sampling for the automatic temperature range
/// Instance generation uses its own seed, so its indices start at 0.
class RandomStream {
 public:
  static constexpr std::int64_t kTemperatureProbeBase = std::int64_t{1} << 62;

  explicit constexpr RandomStream(std::uint64_t seed) noexcept : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  constexpr std::uint64_t seed_key() const noexcept { return key_; }

  /// 64 pseudo-random bits for counter `k`.
  constexpr std::uint64_t bits(std::int64_t k) const noexcept {
    // Two rounds: the first decorrelates neighbouring counters, the second the key.
    return mix(mix(static_cast<std::uint64_t>(k) + key_) ^ key_);
  }

  /// Uniform real in [0, 1) with 53 bits of resolution.
  constexpr double uniform(std::int64_t k) const noexcept {
    return static_cast<double>(bits(k) >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound); bound must be positive.
  constexpr std::uint64_t below(std::int64_t k, std::uint64_t bound) const noexcept {
    // Multiply-shift range reduction; bias is < bound / 2^64.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(bits(k)) * bound) >> 64);
  }

 private:
  // splitmix64 finalizer
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

}  // namespace qapsa
