#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dect/geometry.hpp"

namespace dect::test {

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = dist(gen);
  return v;
}

inline Image random_image(int side, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Image img(side, side);
  const auto v = random_vector(img.size(), seed, lo, hi);
  std::copy(v.begin(), v.end(), img.values().begin());
  return img;
}

inline Sinogram random_sinogram(const ScanGeometry& g, std::uint64_t seed) {
  Sinogram s(g);
  const auto v = random_vector(s.size(), seed);
  std::copy(v.begin(), v.end(), s.values().begin());
  return s;
}

}  // namespace dect::test
