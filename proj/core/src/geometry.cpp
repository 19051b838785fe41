#include "dect/geometry.hpp"

#include <cmath>
#include <numbers>
#include <regex>

#include "dect/error.hpp"

namespace dect {

void ScanGeometry::validate() const {
  if (image_side < 1) throw DimensionError("geometry: image_side must be >= 1");
  if (detector_count < 1) throw DimensionError("geometry: detector_count must be >= 1");
  if (angles.empty()) throw DimensionError("geometry: at least one angle required");
  if (!(pixel_pitch > 0.0) || !(detector_pitch > 0.0)) {
    throw DimensionError("geometry: pitches must be positive");
  }
}

bool ScanGeometry::covers_diagonal() const {
  return detector_count * detector_pitch >= std::sqrt(2.0) * image_side * pixel_pitch;
}

std::vector<double> ScanGeometry::uniform_angles(std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = std::numbers::pi * static_cast<double>(i) / count;
  return out;
}

ScanGeometry ScanGeometry::square(int side, int angles, int detectors, double fov_cm) {
  ScanGeometry g;
  g.image_side = side;
  g.pixel_pitch = fov_cm / side;
  g.angles = uniform_angles(static_cast<std::size_t>(std::max(angles, 0)));
  g.detector_count = detectors;
  g.detector_pitch = g.pixel_pitch;
  g.validate();
  return g;
}

ScanGeometry ScanGeometry::desk() { return square(128, 180, 185); }

ScanGeometry ScanGeometry::paper() { return square(512, 720, 725); }

ScanGeometry ScanGeometry::parse(std::string_view spec) {
  if (spec == "desk") return desk();
  if (spec == "paper") return paper();
  static const std::regex pattern(R"((\d+)x(\d+):(\d+):(\d+))");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(spec.begin(), spec.end(), m, pattern)) {
    throw ConfigError("geometry must be desk, paper or WxH:A:D, got '" + std::string(spec) + "'");
  }
  const int w = std::stoi(m[1].str()), h = std::stoi(m[2].str());
  if (w != h) throw ConfigError("geometry: only square images are supported");
  return square(w, std::stoi(m[3].str()), std::stoi(m[4].str()));
}

}  // namespace dect
