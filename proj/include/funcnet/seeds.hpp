#pragma once

#include <cstdint>

namespace funcnet {

/// splitmix64 step; decent mixing for deriving independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic per-task seed (fold index, replicate index, ...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  return splitmix64(seed ^ splitmix64(salt + 0x51a2b3c4d5e6f701ULL));
}

}  // namespace funcnet
