#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace specpredict {

/// 64-bit finalizer from SplitMix64. Bijective, so distinct inputs never collide.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed for independent substream `stream` of a run seeded with `seed`.
///
/// derive_seed(s, k) = mix64(mix64(s) + (k + 1) * 0x9E3779B97F4A7C15).
/// Depends only on (seed, stream), so adding replicas or changing the worker
/// count never perturbs an existing substream.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) + (stream + 1) * 0x9E3779B97F4A7C15ULL);
}

/// Explicitly seeded pseudorandom source. Every stochastic operation takes one
/// by reference; a given seed yields the same sequence on every platform.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return engine_(); }

  /// Uniform double in [0, 1) built from the top 53 bits of one engine draw.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace specpredict
