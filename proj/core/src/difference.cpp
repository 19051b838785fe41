#include "dect/difference.hpp"

#include "dect/error.hpp"

namespace dect {

void difference(const Image& x, std::span<double> out) {
  const int rows = x.rows(), cols = x.cols();
  const std::size_t n = x.size();
  if (out.size() != 2 * n) throw DimensionError("difference: output must hold 2N values");
  auto h = out.first(n);
  auto v = out.last(n);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      h[i] = c + 1 < cols ? x(r, c + 1) - x(r, c) : 0.0;
      v[i] = r + 1 < rows ? x(r + 1, c) - x(r, c) : 0.0;
    }
  }
}

std::vector<double> difference(const Image& x) {
  std::vector<double> out(2 * x.size());
  difference(x, out);
  return out;
}

void difference_adjoint(std::span<const double> d, Image& out) {
  const int rows = out.rows(), cols = out.cols();
  const std::size_t n = out.size();
  if (d.size() != 2 * n) throw DimensionError("difference_adjoint: input must hold 2N values");
  auto h = d.first(n);
  auto v = d.last(n);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      double acc = 0.0;
      if (c + 1 < cols) acc -= h[i];
      if (c > 0) acc += h[i - 1];
      if (r + 1 < rows) acc -= v[i];
      if (r > 0) acc += v[i - cols];
      out[i] = acc;
    }
  }
}

Image difference_adjoint(std::span<const double> d, int rows, int cols) {
  Image out(rows, cols);
  difference_adjoint(d, out);
  return out;
}

}  // namespace dect
