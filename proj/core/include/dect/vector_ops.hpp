#pragma once

// Serial BLAS-1 helpers. Reductions are deliberately single-threaded so
// results are independent of the worker-thread count.

#include <cmath>
#include <span>

#include "dect/error.hpp"

namespace dect::vec {

inline void check_same(std::size_t a, std::size_t b) {
  if (a != b) throw DimensionError("vector length mismatch");
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  check_same(a.size(), b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_same(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(double alpha, std::span<double> x) {
  for (double& v : x) v *= alpha;
}

// ||a - b||_2
inline double distance(std::span<const double> a, std::span<const double> b) {
  check_same(a.size(), b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace dect::vec
