#pragma once

#include <bit>
#include <cstdint>
#include <string_view>

namespace fcrpool {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed for one independent random stream: (master, purpose, rate, trial).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                    double rate = 0.0, std::uint64_t trial = 0) {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ hash_tag(purpose));
  h = mix64(h ^ std::bit_cast<std::uint64_t>(rate));
  h = mix64(h ^ trial);
  return h;
}

}  // namespace fcrpool
