#pragma once
// Random streams. A root seed is split into independent substreams by
// hashing (seed, chain index, purpose tag) through the splitmix64 finalizer.
// Uniform draws are computed from raw 64-bit outputs so that trajectories do
// not depend on the standard library's distribution implementations.

#include <cstdint>
#include <random>
#include <string_view>

namespace fdlab {

using RngStream = std::mt19937_64;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t tag_hash(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t chain,
                                    std::string_view purpose) {
  return mix64(mix64(root ^ mix64(chain)) ^ tag_hash(purpose));
}

inline RngStream make_stream(std::uint64_t root, std::uint64_t chain,
                             std::string_view purpose) {
  return RngStream(derive_seed(root, chain, purpose));
}

/// Uniform double in [0, 1) with 53 random bits.
template <class Rng>
double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform index in [0, n) by a single multiply-high (no rejection loop).
template <class Rng>
std::size_t uniform_index(Rng& rng, std::size_t n) {
  const unsigned __int128 wide =
      static_cast<unsigned __int128>(static_cast<std::uint64_t>(rng())) * n;
  return static_cast<std::size_t>(wide >> 64);
}

}  // namespace fdlab
