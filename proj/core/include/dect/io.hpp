#pragma once

// Raw little-endian float32 arrays with a plain-text sidecar header, angle
// lists, and 16-bit PGM previews.
//
// Sidecar `<name>.hdr` next to `<name>.raw`:
//   kind image|sinogram
//   rows <n>
//   cols <n>
//   pitch_cm <value>
//   angles_file <path or ->

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dect/geometry.hpp"

namespace dect::io {

struct RawHeader {
  std::string kind;  // "image" or "sinogram"
  int rows = 0;
  int cols = 0;
  double pitch_cm = 0.0;
  std::string angles_file = "-";
};

struct RawArray {
  RawHeader header;
  std::vector<double> values;
};

std::filesystem::path header_path(const std::filesystem::path& raw);

void write_raw(const std::filesystem::path& raw, const RawHeader& header, std::span<const double> values);
RawArray read_raw(const std::filesystem::path& raw);

void write_image(const std::filesystem::path& raw, const Image& image, double pitch_cm);
Image read_image(const std::filesystem::path& raw);
void write_sinogram(const std::filesystem::path& raw, const Sinogram& sinogram, double pitch_cm,
                    const std::string& angles_file);
Sinogram read_sinogram(const std::filesystem::path& raw);

void write_angles(const std::filesystem::path& path, std::span<const double> angles);
std::vector<double> read_angles(const std::filesystem::path& path);

// Linear window [min, max] of the data mapped to 0..65535; the window is
// recorded in a header comment.
void write_pgm16(const std::filesystem::path& path, const Image& image);

}  // namespace dect::io
