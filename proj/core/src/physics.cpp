#include "dect/physics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "dect/builtin_data.hpp"
#include "dect/error.hpp"

namespace dect {

namespace {

// Taylor coefficients of the Klein-Nishina function around alpha = 0.
// The closed form loses ~1/alpha^2 digits to cancellation below alpha ~ 1e-2.
constexpr std::array<double, 11> kKnSeries = {
    4.0 / 3.0,         -8.0 / 3.0,        104.0 / 15.0,      -266.0 / 15.0,
    4576.0 / 105.0,    -2176.0 / 21.0,    15136.0 / 63.0,    -24592.0 / 45.0,
    606208.0 / 495.0,  -447488.0 / 165.0, 2551808.0 / 429.0,
};
constexpr double kKnSeriesLimit = 1e-2;

}  // namespace

double klein_nishina(double energy_kev) {
  if (!(energy_kev > 0.0) || !std::isfinite(energy_kev)) {
    throw DomainError("klein_nishina: energy must be positive, got " + std::to_string(energy_kev));
  }
  const double a = energy_kev / kElectronRestEnergyKeV;
  if (a < kKnSeriesLimit) {
    double acc = 0.0;
    for (auto it = kKnSeries.rbegin(); it != kKnSeries.rend(); ++it) acc = acc * a + *it;
    return acc;
  }
  const double l = std::log1p(2.0 * a);
  const double b = 1.0 + 2.0 * a;
  return (1.0 + a) / (a * a) * (2.0 * (1.0 + a) / b - l / a) + l / (2.0 * a) -
         (1.0 + 3.0 * a) / (b * b);
}

double pe_basis(double energy_kev) {
  if (!(energy_kev > 0.0) || !std::isfinite(energy_kev)) {
    throw DomainError("pe_basis: energy must be positive, got " + std::to_string(energy_kev));
  }
  return 1.0 / (energy_kev * energy_kev * energy_kev);
}

Spectrum::Spectrum(std::vector<double> energies_kev, std::vector<double> counts)
    : energies_(std::move(energies_kev)), counts_(std::move(counts)) {
  if (energies_.empty()) throw DomainError("spectrum: needs at least one bin");
  if (energies_.size() != counts_.size()) {
    throw DomainError("spectrum: energy and count tables differ in length");
  }
  for (std::size_t i = 0; i < energies_.size(); ++i) {
    if (!(energies_[i] > 0.0) || !std::isfinite(energies_[i])) {
      throw DomainError("spectrum: energies must be positive");
    }
    if (i > 0 && !(energies_[i] > energies_[i - 1])) {
      throw DomainError("spectrum: energies must be strictly increasing");
    }
    if (!(counts_[i] >= 0.0) || !std::isfinite(counts_[i])) {
      throw DomainError("spectrum: counts must be nonnegative");
    }
    total_ += counts_[i];
  }
  if (!(total_ > 0.0)) throw DomainError("spectrum: total count must be positive");
  log_total_ = std::log(total_);
  f_kn_.reserve(energies_.size());
  f_p_.reserve(energies_.size());
  for (double e : energies_) {
    f_kn_.push_back(klein_nishina(e));
    f_p_.push_back(dect::pe_basis(e));
  }
}

Spectrum Spectrum::monochromatic(double energy_kev) { return Spectrum({energy_kev}, {1.0}); }

Spectrum Spectrum::parse(std::string_view text) {
  std::vector<double> energies, counts;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    double e = 0.0, c = 0.0;
    if (!(fields >> e)) continue;  // blank or comment-only
    if (!(fields >> c)) {
      throw IoError("spectrum: line " + std::to_string(lineno) + " lacks a count column");
    }
    energies.push_back(e);
    counts.push_back(c);
  }
  return Spectrum(std::move(energies), std::move(counts));
}

Spectrum Spectrum::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spectrum file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Spectrum Spectrum::builtin(int kvp) {
  switch (kvp) {
    case 95:
      return parse(builtin::spectrum_95kvp());
    case 130:
      return parse(builtin::spectrum_130kvp());
    default:
      throw DomainError("no built-in spectrum for " + std::to_string(kvp) + " kVp");
  }
}

double Spectrum::mean_compton() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < size(); ++i) acc += counts_[i] * f_kn_[i];
  return acc / total_;
}

double Spectrum::mean_pe() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < size(); ++i) acc += counts_[i] * f_p_[i];
  return acc / total_;
}

std::string Spectrum::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "# electron rest energy " << kElectronRestEnergyKeV << " keV\n";
  out << "# energy_keV\tcount\n";
  for (std::size_t i = 0; i < size(); ++i) out << energies_[i] << '\t' << counts_[i] << '\n';
  return out.str();
}

void Spectrum::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write spectrum file " + path.string());
  out << to_text();
}

namespace {

// Shared kernel: returns the log-sum-exp pieces and, optionally, the
// spectrum-weighted mean basis values at the given point.
template <bool WithJacobian>
ForwardValue evaluate(const RayIntegralPair& a, const Spectrum& s) {
  const auto counts = s.counts();
  const auto fkn = s.compton_basis();
  const auto fp = s.pe_basis();
  const std::size_t n = s.size();

  // Shift by the smallest exponent among populated bins.
  double t_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[i] > 0.0) t_min = std::min(t_min, fkn[i] * a.compton + fp[i] * a.photo);
  }
  double sum = 0.0, sum_c = 0.0, sum_p = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[i] == 0.0) continue;
    const double w = counts[i] * std::exp(-(fkn[i] * a.compton + fp[i] * a.photo - t_min));
    sum += w;
    if constexpr (WithJacobian) {
      sum_c += w * fkn[i];
      sum_p += w * fp[i];
    }
  }
  ForwardValue out;
  out.value = t_min - std::log(sum) + s.log_total();
  if (!std::isfinite(out.value)) {
    throw SaturationError("forward model saturated", std::numeric_limits<double>::max());
  }
  if constexpr (WithJacobian) {
    out.d_compton = sum_c / sum;
    out.d_photo = sum_p / sum;
  }
  return out;
}

}  // namespace

double forward_f(const RayIntegralPair& a, const Spectrum& spectrum) {
  return evaluate<false>(a, spectrum).value;
}

ForwardValue forward_f_jacobian(const RayIntegralPair& a, const Spectrum& spectrum) {
  return evaluate<true>(a, spectrum);
}

}  // namespace dect
