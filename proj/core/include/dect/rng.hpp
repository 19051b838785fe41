#pragma once

// Counter-derived random streams for reproducible parallel simulation.
// Generator: std::mt19937_64 seeded per (seed, stream) through SplitMix64.
// Bump kRngVersion whenever any of this changes the drawn sequence.

#include <cstdint>
#include <random>

namespace dect {

inline constexpr int kRngVersion = 1;

std::uint64_t splitmix64(std::uint64_t x);

class RayRng {
 public:
  RayRng(std::uint64_t seed, std::uint64_t stream);

  double uniform();   // [0, 1)
  double gaussian();  // standard normal, Box-Muller
  // Inversion for mean < 50, otherwise round(mean + sqrt(mean) * N(0,1))
  // clamped at zero.
  std::uint64_t poisson(double mean);

 private:
  std::mt19937_64 engine_;
};

}  // namespace dect
