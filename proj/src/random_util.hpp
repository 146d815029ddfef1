#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>

namespace pedteach::detail {

// Stream derivation: a fixed, portable mix so seeds mean the same thing on
// every platform.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(stream)));
}

// Unbiased draw in [0, n), n > 0.
inline std::size_t draw_below(std::mt19937_64& rng, std::size_t n) {
  const auto bound = static_cast<std::uint64_t>(n);
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

// Number of successes before the first failure of a fair coin, plus `start`.
inline std::size_t draw_geometric(std::mt19937_64& rng, std::size_t start) {
  std::size_t k = start;
  while (rng() >> 63) ++k;
  return k;
}

}  // namespace pedteach::detail
