#include "dect/phantom.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dect/builtin_data.hpp"
#include "dect/error.hpp"
#include "dect/rng.hpp"

namespace dect {

MaterialTable MaterialTable::parse(std::string_view text) {
  MaterialTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    Material m;
    if (!(fields >> m.name)) continue;
    if (!(fields >> m.compton >> m.photo)) throw IoError("material table: malformed line '" + line + "'");
    if (m.compton < 0.0 || m.photo < 0.0) throw IoError("material table: negative coefficient for " + m.name);
    t.materials_[m.name] = m;
  }
  return t;
}

MaterialTable MaterialTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open material table " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const MaterialTable& MaterialTable::builtin() {
  static const MaterialTable table = parse(builtin::materials_table());
  return table;
}

const Material& MaterialTable::at(const std::string& name) const {
  auto it = materials_.find(name);
  if (it == materials_.end()) throw ConfigError("unknown material '" + name + "'");
  return it->second;
}

PhantomSpec PhantomSpec::parse(std::string_view text, std::string name) {
  PhantomSpec spec;
  spec.name = std::move(name);
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string kind;
    if (!(fields >> kind)) continue;
    if (kind == "disc") {
      DiscShape d;
      if (!(fields >> d.cx >> d.cy >> d.radius >> d.material) || d.radius <= 0.0) {
        throw ConfigError("phantom line " + std::to_string(lineno) + ": expected `disc cx cy r material`");
      }
      spec.shapes.push_back(d);
    } else if (kind == "background") {
      if (!(fields >> spec.background)) throw ConfigError("phantom line " + std::to_string(lineno) + ": background");
    } else {
      throw ConfigError("phantom line " + std::to_string(lineno) + ": unknown shape '" + kind + "'");
    }
  }
  return spec;
}

PhantomSpec PhantomSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open phantom file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.stem().string());
}

std::string PhantomSpec::to_text() const {
  std::ostringstream out;
  out << "# phantom " << name << "\nbackground " << background << '\n';
  for (const auto& d : shapes) out << "disc " << d.cx << ' ' << d.cy << ' ' << d.radius << ' ' << d.material << '\n';
  return out.str();
}

void PhantomSpec::validate(const ScanGeometry& geometry, const MaterialTable& materials) const {
  const double fov_radius = 0.5 * geometry.image_side * geometry.pixel_pitch;
  materials.at(background);
  for (const auto& d : shapes) {
    materials.at(d.material);
    if (std::hypot(d.cx, d.cy) + d.radius > fov_radius * (1.0 + 1e-12)) {
      throw ConfigError("phantom " + name + ": disc at (" + std::to_string(d.cx) + ", " + std::to_string(d.cy) +
                        ") leaves the field of view");
    }
  }
}

PhantomSpec builtin_phantom(std::string_view name) {
  PhantomSpec p;
  p.name = std::string(name);
  if (name == "sim18") {
    p.shapes.push_back({0.0, 0.0, 12.0, "water"});
    p.shapes.push_back({0.0, 0.0, 2.0, "aluminum"});
    const char* ring[] = {"pmma", "polyethylene", "teflon", "delrin", "nylon", "magnesium"};
    for (int i = 0; i < 6; ++i) {
      const double phi = std::numbers::pi / 3.0 * i;
      p.shapes.push_back({7.0 * std::cos(phi), 7.0 * std::sin(phi), 1.8, ring[i]});
    }
  } else if (name == "clutter") {
    p.shapes = {
        {0.0, 0.0, 13.0, "polyethylene"},
        {-4.0, 3.0, 5.0, "water"},
        {3.0, -2.0, 4.5, "pmma"},
        {5.0, 5.0, 3.0, "delrin"},
        {-5.0, -5.0, 3.5, "graphite"},
        {0.0, 1.0, 2.5, "teflon"},
        {6.0, -6.5, 1.5, "aluminum"},
        {-3.0, 4.0, 0.8, "iron"},
        {4.0, -3.0, 0.6, "iron"},
    };
  } else {
    throw ConfigError("unknown phantom '" + std::string(name) + "' (expected sim18 or clutter)");
  }
  return p;
}

BasisImage rasterize(const PhantomSpec& spec, const ScanGeometry& geometry, const MaterialTable& materials) {
  const int n = geometry.image_side;
  const double h = geometry.pixel_pitch;
  const double half = 0.5 * (n - 1);
  const Material& bg = materials.at(spec.background);
  std::vector<const Material*> mats;
  for (const auto& d : spec.shapes) mats.push_back(&materials.at(d.material));

  BasisImage out{Image(n, n, bg.compton), Image(n, n, bg.photo)};
#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r) {
    const double y = (half - r) * h;
    for (int c = 0; c < n; ++c) {
      const double x = (c - half) * h;
      for (std::size_t s = 0; s < spec.shapes.size(); ++s) {
        const auto& d = spec.shapes[s];
        const double dx = x - d.cx, dy = y - d.cy;
        if (dx * dx + dy * dy <= d.radius * d.radius) {
          out.compton(r, c) = mats[s]->compton;
          out.photo(r, c) = mats[s]->photo;
        }
      }
    }
  }
  return out;
}

Measurements simulate(const BasisImage& image, const Projector& projector, const SpectrumPair& spectra,
                      const SimulationOptions& options) {
  if (!(options.photons_per_ray > 0.0)) throw DomainError("simulate: photons_per_ray must be positive");
  Measurements out;
  out.line_compton = projector.forward(image.compton);
  out.line_photo = projector.forward(image.photo);
  const std::size_t rays = out.line_compton.size();
  const int na = out.line_compton.angles(), nd = out.line_compton.detectors();
  for (SinogramPair* pair : {&out.log, &out.weights, &out.clean}) {
    pair->high = Sinogram(na, nd);
    pair->low = Sinogram(na, nd);
  }
  const double photons = options.photons_per_ray;
  const double starved_m = std::log(photons);
  std::vector<unsigned char> starved(rays, 0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rays); ++r) {
    const std::size_t i = static_cast<std::size_t>(r);
    const RayIntegralPair a{out.line_compton[i], out.line_photo[i]};
    const Spectrum* specs[2] = {&spectra.high, &spectra.low};
    Sinogram* logs[2] = {&out.log.high, &out.log.low};
    Sinogram* weights[2] = {&out.weights.high, &out.weights.low};
    Sinogram* clean[2] = {&out.clean.high, &out.clean.low};
    for (int s = 0; s < 2; ++s) {
      const double m = forward_f(a, *specs[s]);
      (*clean[s])[i] = m;
      const double expected = photons * std::exp(-m);
      if (!options.noisy) {
        (*logs[s])[i] = m;
        (*weights[s])[i] = expected;
        continue;
      }
      RayRng rng(options.seed, 2 * static_cast<std::uint64_t>(i) + static_cast<std::uint64_t>(s));
      const auto counts = rng.poisson(expected);
      if (counts == 0) {
        (*logs[s])[i] = starved_m;
        (*weights[s])[i] = 0.0;
        starved[i] = 1;
      } else {
        (*logs[s])[i] = -std::log(static_cast<double>(counts) / photons);
        (*weights[s])[i] = static_cast<double>(counts);
      }
    }
  }
  for (std::size_t i = 0; i < rays; ++i) {
    if (starved[i]) out.starved.push_back(i);
  }
  return out;
}

}  // namespace dect
