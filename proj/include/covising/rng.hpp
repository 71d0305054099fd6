#pragma once

#include <cstdint>
#include <random>

namespace covising {

using Rng = std::mt19937_64;

// splitmix64 step, used only to whiten derived seeds.
inline std::uint64_t split_mix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed for an independent sub-stream of `seed`. The same (seed, stream)
// always yields the same value, and the result does not depend on how many
// other streams exist, so parallel consumers stay reproducible.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed + (stream + 1) * 0x9e3779b97f4a7c15ULL;
  std::uint64_t a = split_mix64(s);
  std::uint64_t b = split_mix64(s);
  return a ^ (b >> 1);
}

inline Rng substream(std::uint64_t seed, std::uint64_t stream) {
  return Rng(mix_seed(seed, stream));
}

}  // namespace covising
