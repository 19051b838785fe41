#pragma once

// Disc phantoms, built-in test objects and dual-spectrum measurement
// simulation with Poisson photon noise.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dect/geometry.hpp"
#include "dect/physics.hpp"
#include "dect/projector.hpp"

namespace dect {

struct Material {
  std::string name;
  double compton = 0.0;  // x_c, 1/cm
  double photo = 0.0;    // x_p, keV^3/cm
};

// `name x_c x_p` per line, '#' comments.
class MaterialTable {
 public:
  static MaterialTable parse(std::string_view text);
  static MaterialTable load(const std::filesystem::path& path);
  // Fitted table shipped in data/materials.txt.
  static const MaterialTable& builtin();

  const Material& at(const std::string& name) const;
  bool contains(const std::string& name) const { return materials_.count(name) != 0; }
  std::size_t size() const { return materials_.size(); }

 private:
  std::map<std::string, Material> materials_;
};

// Disc in cm, image centre at the origin, +y towards row 0.
struct DiscShape {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
  std::string material;
};

struct PhantomSpec {
  std::string name;
  std::string background = "vacuum";
  std::vector<DiscShape> shapes;  // later shapes overwrite earlier ones

  // Lines `disc cx cy r material` and optionally `background material`.
  static PhantomSpec parse(std::string_view text, std::string name = "custom");
  static PhantomSpec load(const std::filesystem::path& path);
  std::string to_text() const;

  // Every disc must lie inside the inscribed field-of-view circle and use a
  // known material. Throws ConfigError.
  void validate(const ScanGeometry& geometry, const MaterialTable& materials = MaterialTable::builtin()) const;
};

// "sim18": water body, aluminium centre disc and six lighter inserts.
// "clutter": overlapping discs in a plastic container with two iron inserts.
PhantomSpec builtin_phantom(std::string_view name);

// Centre-of-pixel membership; later shapes win.
BasisImage rasterize(const PhantomSpec& spec, const ScanGeometry& geometry,
                     const MaterialTable& materials = MaterialTable::builtin());

struct SimulationOptions {
  double photons_per_ray = 1e5;
  std::uint64_t seed = 0;
  bool noisy = true;
};

struct Measurements {
  SinogramPair log;        // m_h, m_l (noisy, or equal to `clean` when noiseless)
  SinogramPair weights;    // detected counts (expected counts when noiseless)
  SinogramPair clean;      // noiseless log projections
  Sinogram line_compton;   // R x_c
  Sinogram line_photo;     // R x_p
  std::vector<std::size_t> starved;  // ray indices with a zero draw in either spectrum
};

// Expected counts N = photons * exp(-m_clean); N ~ Poisson per spectrum,
// independently; m = -ln(N / photons). Zero draws get weight 0 and
// m = ln(photons) (as if one photon arrived).
Measurements simulate(const BasisImage& image, const Projector& projector, const SpectrumPair& spectra,
                      const SimulationOptions& options);

}  // namespace dect
