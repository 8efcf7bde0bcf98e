#pragma once

#include <cstdint>
#include <random>

namespace tagm {

// splitmix64 step, used to derive independent seeds from a base seed and a
// stream index. Keeps every run reproducible without sharing generator state
// across unrelated phases (restarts, stability repeats, ...).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x51ed270b7a14c1b3ULL));
}

using Rng = std::mt19937_64;

}  // namespace tagm
