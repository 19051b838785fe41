#include "dect/metrics.hpp"

#include <cmath>
#include <limits>

#include "dect/error.hpp"

namespace dect {

namespace {

double to_db(double num_sq, double den_sq) {
  if (!(den_sq > 0.0)) throw DomainError("error_db: reference has zero norm");
  if (num_sq == 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(std::sqrt(num_sq) / std::sqrt(den_sq));
}

}  // namespace

double error_db(std::span<const double> x, std::span<const double> reference) {
  if (x.size() != reference.size()) throw DimensionError("error_db: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - reference[i];
    num += d * d;
    den += reference[i] * reference[i];
  }
  return to_db(num, den);
}

double error_db(const Image& x, const Image& reference, const Image* roi) {
  if (!x.same_shape(reference)) throw DimensionError("error_db: image shapes differ");
  if (!roi) return error_db(x.values(), reference.values());
  if (!roi->same_shape(x)) throw DimensionError("error_db: ROI shape differs");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if ((*roi)[i] == 0.0) continue;
    const double d = x[i] - reference[i];
    num += d * d;
    den += reference[i] * reference[i];
  }
  return to_db(num, den);
}

}  // namespace dect
