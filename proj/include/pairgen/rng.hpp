#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pairgen {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Expands a global seed into an independent sub-seed for a named component.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t base, std::string_view tag, std::uint64_t index = 0) {
  return Rng(derive_seed(base, tag, index));
}

// Uniform double in [0, 1) built from the top 53 bits, so that sampling does
// not depend on the standard library's distribution implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). n must be positive.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

double normal01(Rng& rng);

}  // namespace pairgen
