#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ewopt {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Independent generator for (seed, tag). Draws under one tag never affect
// draws under another, so e.g. sampling and probe construction are isolated.
inline std::mt19937_64 substream(std::uint64_t seed, std::string_view tag) {
  return std::mt19937_64(splitmix64(seed ^ fnv1a(tag)));
}

}  // namespace ewopt
