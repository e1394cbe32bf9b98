#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace mfucrl {

/// Counter-based seed derivation. Every random stream in the project is
/// seeded by mixing the master seed with a tag and a list of counters, so the
/// stream a given candidate/particle/episode sees never depends on evaluation
/// order.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t c : path) h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

/// Uniform in (0, 1) from a 64-bit key.
inline double key_uniform(std::uint64_t key) {
  return (static_cast<double>(splitmix64(key) >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal from a 64-bit key (Box-Muller on two derived uniforms).
inline double key_normal(std::uint64_t key) {
  const double u1 = key_uniform(key);
  const double u2 = key_uniform(key ^ 0xd1b54a32d192ed03ULL);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Stream tags.
namespace stream {
inline constexpr std::uint64_t kBenchmark = 1;
inline constexpr std::uint64_t kPlan = 2;
inline constexpr std::uint64_t kCollect = 3;
inline constexpr std::uint64_t kParticles = 4;
inline constexpr std::uint64_t kValidate = 5;
}  // namespace stream

}  // namespace mfucrl
