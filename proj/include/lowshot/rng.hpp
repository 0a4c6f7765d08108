#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace lowshot {

using Rng = std::mt19937_64;

// Uniform double in [0,1) from the top 53 bits of one engine output; avoids
// the library-specific behaviour of std::uniform_real_distribution.
inline double unit_uniform(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection, n > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// SplitMix64 finalizer; derives independent child seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string serialize_rng(const Rng& rng);
Rng deserialize_rng(const std::string& state);

}  // namespace lowshot
