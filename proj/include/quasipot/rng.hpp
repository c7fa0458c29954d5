#pragma once

#include <cmath>
#include <cstdint>

#include "quasipot/linalg.hpp"

namespace quasipot {

// Counter-based noise: every normal draw is a pure function of
// (seed, step, lane), so trajectories are reproducible and trials can run
// on any number of workers without shared state.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t step, std::uint64_t lane) {
  return splitmix64(splitmix64(seed ^ splitmix64(step)) ^ splitmix64(lane ^ 0xA5A5A5A5DEADBEEFULL));
}

// Uniform in (0, 1].
inline double uniform_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two counter-hashed uniforms.
inline double normal_draw(std::uint64_t seed, std::uint64_t step, std::uint64_t lane) {
  const double u1 = uniform_open(counter_hash(seed, step, 2 * lane));
  const double u2 = uniform_open(counter_hash(seed, step, 2 * lane + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline void fill_normals(std::uint64_t seed, std::uint64_t step, Vec& out) {
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = normal_draw(seed, step, static_cast<std::uint64_t>(i));
}

// Per-trial seed derivation from a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 0x5851F42D4C957F2DULL));
}

}  // namespace quasipot
