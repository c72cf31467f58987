#pragma once

#include <cstdint>
#include <random>

namespace finsim {

using RngStream = std::mt19937_64;

/// splitmix64 step; used to derive independent per-task seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for task `index` under `master`. Distinct indices give decorrelated streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline RngStream make_stream(std::uint64_t master, std::uint64_t index = 0) {
  return RngStream(derive_seed(master, index));
}

}  // namespace finsim
