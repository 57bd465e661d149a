#pragma once

// Portable seeded randomness. The standard distributions are implementation
// defined, so sampling goes through these helpers to keep outputs identical
// across standard libraries.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace dialectic {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; mixes a seed with a stream index.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a, stable across platforms (unlike std::hash).
constexpr std::uint64_t stable_hash(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Standard normal via Box-Muller.
inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Inverse-CDF draw from unnormalized nonnegative weights.
template <typename Weights>
int sample_index(const Weights& weights, Rng& rng) {
  double total = 0;
  const auto n = static_cast<int>(weights.size());
  for (int i = 0; i < n; ++i) total += weights[i];
  double u = uniform01(rng) * total;
  for (int i = 0; i < n; ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  for (int i = n - 1; i >= 0; --i)
    if (weights[i] > 0) return i;
  return n - 1;
}

}  // namespace dialectic
