#pragma once

#include <cstdint>
#include <string_view>

namespace elab {

/// Stable 64-bit FNV-1a hash; unlike std::hash it is identical across builds.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// splitmix64 finalizer, used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for an independent substream keyed by name (seed xor hash(key)).
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::string_view key) {
  return mix64(seed ^ fnv1a64(key));
}

}  // namespace elab
