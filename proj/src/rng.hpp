#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "numerics.hpp"

namespace cwss {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for an independent named stream. Every consumer of randomness picks
/// its own purpose string, so adding a consumer never shifts another's draws.
inline std::uint64_t stream_seed(std::uint64_t base, std::string_view purpose,
                                 std::uint64_t index = 0) {
  return splitmix64(splitmix64(base ^ fnv1a(purpose)) + splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t base, std::string_view purpose, std::uint64_t index = 0) {
  return Rng(stream_seed(base, purpose, index));
}

inline DenseVector gaussian_vector(Rng& rng, std::size_t n, double stddev = 1.0) {
  std::normal_distribution<double> dist(0.0, stddev);
  DenseVector v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

/// Standard Gaussian direction scaled to unit norm.
inline DenseVector unit_gaussian(Rng& rng, std::size_t n) {
  DenseVector v = gaussian_vector(rng, n);
  const double nv = norm2(v);
  return nv > 0.0 ? (1.0 / nv) * v : v;
}

}  // namespace cwss
