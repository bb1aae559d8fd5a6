#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace svddsel {

using Seed = std::uint64_t;
using Engine = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent child seed from a parent seed and a path of
/// stream identifiers, e.g. derive_seed(task_seed, {grid_index, kStreamMc}).
/// Same inputs always give the same child, regardless of evaluation order.
inline Seed derive_seed(Seed parent, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = mix64(parent);
  for (auto p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

inline Engine make_engine(Seed seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Engine(seq);
}

// Stream tags for derive_seed.
inline constexpr std::uint64_t kStreamFit = 1;
inline constexpr std::uint64_t kStreamMonteCarlo = 2;
inline constexpr std::uint64_t kStreamSmote = 3;
inline constexpr std::uint64_t kStreamPolarization = 4;
inline constexpr std::uint64_t kStreamSplit = 5;
inline constexpr std::uint64_t kStreamAnomalies = 6;
inline constexpr std::uint64_t kStreamBatch = 7;

}  // namespace svddsel
