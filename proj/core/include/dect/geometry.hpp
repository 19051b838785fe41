#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dect {

// Parallel-beam scan of a square image centred on the rotation axis.
struct ScanGeometry {
  int image_side = 0;          // pixels per side
  double pixel_pitch = 0.0;    // cm
  std::vector<double> angles;  // radians in [0, pi)
  int detector_count = 0;
  double detector_pitch = 0.0;  // cm

  std::size_t pixel_count() const { return static_cast<std::size_t>(image_side) * image_side; }
  std::size_t ray_count() const { return angles.size() * static_cast<std::size_t>(detector_count); }
  std::size_t angle_count() const { return angles.size(); }

  // Throws DimensionError on an empty image/detector or missing angles.
  void validate() const;
  // True when the detector span covers the image diagonal.
  bool covers_diagonal() const;

  // `count` angles uniformly spaced over [0, pi).
  static std::vector<double> uniform_angles(std::size_t count);

  // Field of view is 32 cm wide for the built-in geometries.
  static ScanGeometry desk();   // 128x128, 180 angles, 185 detectors
  static ScanGeometry paper();  // 512x512, 720 angles, 725 detectors
  static ScanGeometry square(int side, int angles, int detectors, double fov_cm = 32.0);
  // Accepts "desk", "paper" or "WxH:A:D" (W == H required).
  static ScanGeometry parse(std::string_view spec);

  bool operator==(const ScanGeometry&) const = default;
};

// Row-major image, row 0 at the top (+y).
class Image {
 public:
  Image() = default;
  Image(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(static_cast<std::size_t>(rows) * cols, fill) {}
  explicit Image(const ScanGeometry& g, double fill = 0.0) : Image(g.image_side, g.image_side, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  double& operator()(int r, int c) { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& storage() { return values_; }

  bool same_shape(const Image& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool matches(const ScanGeometry& g) const { return rows_ == g.image_side && cols_ == g.image_side; }
  bool operator==(const Image&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> values_;
};

// Angle-major sinogram: value(angle, detector).
class Sinogram {
 public:
  Sinogram() = default;
  Sinogram(int angles, int detectors, double fill = 0.0)
      : angles_(angles), detectors_(detectors), values_(static_cast<std::size_t>(angles) * detectors, fill) {}
  explicit Sinogram(const ScanGeometry& g, double fill = 0.0)
      : Sinogram(static_cast<int>(g.angles.size()), g.detector_count, fill) {}

  int angles() const { return angles_; }
  int detectors() const { return detectors_; }
  std::size_t size() const { return values_.size(); }
  double& operator()(int a, int d) { return values_[static_cast<std::size_t>(a) * detectors_ + d]; }
  double operator()(int a, int d) const { return values_[static_cast<std::size_t>(a) * detectors_ + d]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> row(int a) { return values().subspan(static_cast<std::size_t>(a) * detectors_, detectors_); }
  std::span<const double> row(int a) const {
    return values().subspan(static_cast<std::size_t>(a) * detectors_, detectors_);
  }

  bool same_shape(const Sinogram& o) const { return angles_ == o.angles_ && detectors_ == o.detectors_; }
  bool matches(const ScanGeometry& g) const {
    return angles_ == static_cast<int>(g.angles.size()) && detectors_ == g.detector_count;
  }
  bool operator==(const Sinogram&) const = default;

 private:
  int angles_ = 0;
  int detectors_ = 0;
  std::vector<double> values_;
};

// Compton / photoelectric image pair.
struct BasisImage {
  Image compton;
  Image photo;
};

// High / low spectrum log-projection pair.
struct SinogramPair {
  Sinogram high;
  Sinogram low;
};

}  // namespace dect
