#pragma once

#include <cstdint>
#include <random>

namespace triplerec {

using Rng = std::mt19937_64;

/// splitmix64 finalizer (increment 0x9E3779B97F4A7C15, multipliers
/// 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for stream `stream`, attempt `attempt` under a master seed. Streams
/// and attempts are independent, so replicates can run in any order.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t attempt) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ attempt);
}

}  // namespace triplerec
