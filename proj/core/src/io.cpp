#include "dect/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "dect/error.hpp"

namespace dect::io {

namespace {

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
}

}  // namespace

std::filesystem::path header_path(const std::filesystem::path& raw) {
  auto p = raw;
  p.replace_extension(".hdr");
  return p;
}

void write_raw(const std::filesystem::path& raw, const RawHeader& header, std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(header.rows) * header.cols) {
    throw DimensionError("write_raw: value count does not match rows x cols");
  }
  std::ofstream out(raw, std::ios::binary);
  if (!out) throw IoError("cannot write " + raw.string());
  std::vector<std::uint32_t> words(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    words[i] = to_little(std::bit_cast<std::uint32_t>(static_cast<float>(values[i])));
  }
  out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
  if (!out) throw IoError("short write to " + raw.string());

  std::ofstream hdr(header_path(raw));
  if (!hdr) throw IoError("cannot write header for " + raw.string());
  hdr << "kind " << header.kind << '\n'
      << "rows " << header.rows << '\n'
      << "cols " << header.cols << '\n'
      << "pitch_cm " << std::setprecision(17) << header.pitch_cm << '\n'
      << "angles_file " << (header.angles_file.empty() ? "-" : header.angles_file) << '\n';
}

RawArray read_raw(const std::filesystem::path& raw) {
  RawArray arr;
  std::ifstream hdr(header_path(raw));
  if (!hdr) throw IoError("missing header " + header_path(raw).string());
  std::string key;
  while (hdr >> key) {
    if (key == "kind") {
      hdr >> arr.header.kind;
    } else if (key == "rows") {
      hdr >> arr.header.rows;
    } else if (key == "cols") {
      hdr >> arr.header.cols;
    } else if (key == "pitch_cm") {
      hdr >> arr.header.pitch_cm;
    } else if (key == "angles_file") {
      hdr >> arr.header.angles_file;
    } else {
      throw IoError("unknown header key '" + key + "' in " + header_path(raw).string());
    }
    if (!hdr) throw IoError("malformed header " + header_path(raw).string());
  }
  if (arr.header.rows < 1 || arr.header.cols < 1) throw IoError("header lacks rows/cols: " + raw.string());

  const std::size_t n = static_cast<std::size_t>(arr.header.rows) * arr.header.cols;
  std::ifstream in(raw, std::ios::binary);
  if (!in) throw IoError("cannot read " + raw.string());
  std::vector<std::uint32_t> words(n);
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(n * 4));
  if (in.gcount() != static_cast<std::streamsize>(n * 4)) throw IoError("truncated raw file " + raw.string());
  arr.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) arr.values[i] = std::bit_cast<float>(to_little(words[i]));
  return arr;
}

void write_image(const std::filesystem::path& raw, const Image& image, double pitch_cm) {
  write_raw(raw, {"image", image.rows(), image.cols(), pitch_cm, "-"}, image.values());
}

Image read_image(const std::filesystem::path& raw) {
  auto arr = read_raw(raw);
  if (arr.header.kind != "image") throw IoError(raw.string() + " is not an image");
  Image img(arr.header.rows, arr.header.cols);
  std::copy(arr.values.begin(), arr.values.end(), img.values().begin());
  return img;
}

void write_sinogram(const std::filesystem::path& raw, const Sinogram& sinogram, double pitch_cm,
                    const std::string& angles_file) {
  write_raw(raw, {"sinogram", sinogram.angles(), sinogram.detectors(), pitch_cm, angles_file}, sinogram.values());
}

Sinogram read_sinogram(const std::filesystem::path& raw) {
  auto arr = read_raw(raw);
  if (arr.header.kind != "sinogram") throw IoError(raw.string() + " is not a sinogram");
  Sinogram s(arr.header.rows, arr.header.cols);
  std::copy(arr.values.begin(), arr.values.end(), s.values().begin());
  return s;
}

void write_angles(const std::filesystem::path& path, std::span<const double> angles) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  for (double a : angles) out << a << '\n';
}

std::vector<double> read_angles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<double> out;
  double a = 0.0;
  while (in >> a) out.push_back(a);
  if (!in.eof()) throw IoError("malformed angle list " + path.string());
  return out;
}

void write_pgm16(const std::filesystem::path& path, const Image& image) {
  const auto v = image.values();
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = v.empty() ? 0.0 : *lo_it;
  const double hi = v.empty() ? 0.0 : *hi_it;
  const double span = hi > lo ? hi - lo : 1.0;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n# window " << std::setprecision(9) << lo << ' ' << hi << '\n'
      << image.cols() << ' ' << image.rows() << "\n65535\n";
  std::vector<unsigned char> bytes(v.size() * 2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double t = std::clamp((v[i] - lo) / span, 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    bytes[2 * i] = static_cast<unsigned char>(q >> 8);  // PGM is big-endian
    bytes[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace dect::io
