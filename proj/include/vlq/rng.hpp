#pragma once

#include <cmath>
#include <cstdint>

namespace vlq {

/**
 * Counter-based Gaussian increments: every (seed, path, step) triple maps to
 * one standard normal through an avalanching integer hash and Box-Muller.
 * No mutable state, so results do not depend on thread count or evaluation
 * order, and any path/step can be regenerated in isolation.
 */
namespace rng {

inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash3(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                           std::uint64_t stream) {
  std::uint64_t z = mix(seed);
  z = mix(z ^ (path * 0xd1342543de82ef95ULL));
  z = mix(z ^ (step * 0xaf251af3b0f025b5ULL));
  return mix(z ^ (stream * 0x2545f4914f6cdd1dULL));
}

inline double uniform01(std::uint64_t h) {  // in the open interval (0,1)
  return (double(h >> 11) + 0.5) * 0x1.0p-53;
}

inline double standard_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step) {
  const double u1 = uniform01(hash3(seed, path, step, 0));
  const double u2 = uniform01(hash3(seed, path, step, 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

/// Brownian increment over one grid cell of width dt.
inline double brownian_increment(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                                 double dt) {
  return std::sqrt(dt) * standard_normal(seed, path, step);
}

}  // namespace rng
}  // namespace vlq
