#include "dect/projector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "dect/error.hpp"
#include "fft.hpp"

namespace dect {

Projector::Projector(ScanGeometry geometry, std::shared_ptr<OpCounters> counters)
    : geom_(std::move(geometry)), counters_(counters ? std::move(counters) : std::make_shared<OpCounters>()) {
  geom_.validate();
  const double h = geom_.pixel_pitch;
  const double dp = geom_.detector_pitch;
  tables_.reserve(geom_.angles.size());
  for (double theta : geom_.angles) {
    const double c = std::cos(theta), s = std::sin(theta);
    AngleTable t{};
    t.row_driven = std::abs(c) >= std::abs(s);
    if (t.row_driven) {
      t.step_len = h / std::abs(c);
      t.det_slope = dp / (h * c);
      t.line_slope = s / c;
    } else {
      t.step_len = h / std::abs(s);
      t.det_slope = -dp / (h * s);
      t.line_slope = c / s;
    }
    tables_.push_back(t);
  }
}

// Fractional image index (column for row-driven angles, row otherwise) at
// which ray `det` crosses image line `line`. Shared by forward and adjoint
// so both use bit-identical interpolation weights.
inline double Projector::position(const AngleTable& t, int det, int line) const {
  const double half_d = 0.5 * (geom_.detector_count - 1);
  const double half_n = 0.5 * (geom_.image_side - 1);
  return (det - half_d) * t.det_slope + (line - half_n) * t.line_slope + half_n;
}

void Projector::check_image(std::size_t n) const {
  if (n != geom_.pixel_count()) {
    throw DimensionError("projector: image has " + std::to_string(n) + " pixels, geometry expects " +
                         std::to_string(geom_.pixel_count()));
  }
}

void Projector::check_sinogram(std::size_t n) const {
  if (n != geom_.ray_count()) {
    throw DimensionError("projector: sinogram has " + std::to_string(n) + " bins, geometry expects " +
                         std::to_string(geom_.ray_count()));
  }
}

Sinogram Projector::forward(const Image& image) const {
  if (!image.matches(geom_)) throw DimensionError("projector: image does not match geometry");
  Sinogram out(geom_);
  forward(image.values(), out.values());
  return out;
}

void Projector::forward(std::span<const double> image, std::span<double> sinogram) const {
  check_image(image.size());
  check_sinogram(sinogram.size());
  const int n = geom_.image_side;
  const int nd = geom_.detector_count;
  const int na = static_cast<int>(tables_.size());

#pragma omp parallel for schedule(static)
  for (int a = 0; a < na; ++a) {
    const AngleTable& t = tables_[a];
    for (int k = 0; k < nd; ++k) {
      double acc = 0.0;
      for (int line = 0; line < n; ++line) {
        const double p = position(t, k, line);
        if (!(p > -1.0 && p < n)) continue;
        const int j0 = static_cast<int>(std::floor(p));
        const double frac = p - j0;
        // row-driven: pixel (line, j); column-driven: pixel (j, line)
        auto pixel = [&](int j) -> double {
          return t.row_driven ? image[static_cast<std::size_t>(line) * n + j]
                              : image[static_cast<std::size_t>(j) * n + line];
        };
        if (j0 >= 0) acc += (1.0 - frac) * pixel(j0);
        if (j0 + 1 < n) acc += frac * pixel(j0 + 1);
      }
      sinogram[static_cast<std::size_t>(a) * nd + k] = acc * t.step_len;
    }
  }
  counters_->add_forward();
}

Image Projector::back(const Sinogram& sinogram) const {
  if (!sinogram.matches(geom_)) throw DimensionError("projector: sinogram does not match geometry");
  Image out(geom_);
  back(sinogram.values(), out.values());
  return out;
}

void Projector::back(std::span<const double> sinogram, std::span<double> image) const {
  check_image(image.size());
  check_sinogram(sinogram.size());
  const int n = geom_.image_side;
  const int nd = geom_.detector_count;
  const int na = static_cast<int>(tables_.size());
  const double half_d = 0.5 * (nd - 1);
  const double half_n = 0.5 * (n - 1);

#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double pixel = 0.0;
      for (int a = 0; a < na; ++a) {
        const AngleTable& t = tables_[a];
        // The ray hits this pixel's line at index `target`; gather every
        // detector whose interpolation footprint [j0, j0+1] contains it.
        const int line = t.row_driven ? r : c;
        const int target = t.row_driven ? c : r;
        const double base = -half_d * t.det_slope + (line - half_n) * t.line_slope + half_n;
        double k_a = (target - 1 - base) / t.det_slope;
        double k_b = (target + 1 - base) / t.det_slope;
        if (k_a > k_b) std::swap(k_a, k_b);
        const int k_lo = std::max(0, static_cast<int>(std::floor(k_a)) - 1);
        const int k_hi = std::min(nd - 1, static_cast<int>(std::ceil(k_b)) + 1);
        const double* row = sinogram.data() + static_cast<std::size_t>(a) * nd;
        double acc = 0.0;
        for (int k = k_lo; k <= k_hi; ++k) {
          const double p = position(t, k, line);
          if (!(p > -1.0 && p < n)) continue;
          const int j0 = static_cast<int>(std::floor(p));
          const double frac = p - j0;
          if (j0 == target) {
            acc += (1.0 - frac) * row[k];
          } else if (j0 + 1 == target) {
            acc += frac * row[k];
          }
        }
        pixel += acc * t.step_len;
      }
      image[static_cast<std::size_t>(r) * n + c] = pixel;
    }
  }
  counters_->add_backward();
}

Sinogram ramp_filter(const Sinogram& sinogram) {
  const int nd = sinogram.detectors();
  if (nd < 2) throw DimensionError("ramp_filter: needs at least 2 detectors");
  const int padded = static_cast<int>(std::bit_ceil(static_cast<unsigned>(2 * nd)));
  const int offset = (padded - nd) / 2;
  const detail::RealFft fft(padded);

  std::vector<double> gain(padded / 2 + 1);
  for (int k = 0; k <= padded / 2; ++k) gain[k] = static_cast<double>(k) / padded / padded;

  Sinogram out(sinogram.angles(), nd);
#pragma omp parallel
  {
    std::vector<double> buf(padded);
    std::vector<detail::Complex> spec(padded / 2 + 1);
#pragma omp for schedule(static)
    for (int a = 0; a < sinogram.angles(); ++a) {
      const auto row = sinogram.row(a);
      // Row centred in the padded buffer, edge values replicated outwards.
      for (int i = 0; i < padded; ++i) buf[i] = row[std::clamp(i - offset, 0, nd - 1)];
      fft.forward(buf, spec);
      for (int k = 0; k <= padded / 2; ++k) spec[k] *= gain[k];
      fft.inverse(spec, buf);
      std::copy_n(buf.begin() + offset, nd, out.row(a).begin());
    }
  }
  return out;
}

Image fbp(const Sinogram& sinogram, const Projector& projector) {
  const auto& g = projector.geometry();
  if (!sinogram.matches(g)) throw DimensionError("fbp: sinogram does not match geometry");
  Image img = projector.back(ramp_filter(sinogram));
  const double scale = std::numbers::pi / (static_cast<double>(g.angles.size()) * g.pixel_pitch * g.pixel_pitch);
  for (double& v : img.values()) v *= scale;
  return img;
}

}  // namespace dect
