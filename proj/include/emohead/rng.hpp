#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace emohead {

using Rng = std::mt19937_64;

// FNV-1a, stable across platforms and runs.
constexpr std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

// Independent generator for a named purpose ("data", "crop", "dropout",
// "init", ...), so adding draws to one stream never shifts another.
inline Rng named_stream(std::uint64_t seed, std::string_view name) {
  const std::uint64_t h = stable_hash(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

}  // namespace emohead
