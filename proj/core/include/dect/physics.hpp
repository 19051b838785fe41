#pragma once

// Energy basis functions, X-ray spectra and the nonlinear dual-energy
// forward model mapping Compton/photoelectric line integrals to log
// projections.

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace dect {

inline constexpr double kElectronRestEnergyKeV = 510.975;

// Klein-Nishina energy dependence of the Compton cross section, normalised
// so the low-energy (Thomson) limit is 4/3. Throws DomainError for E <= 0.
double klein_nishina(double energy_kev);

// Photoelectric basis E^-3. Throws DomainError for E <= 0.
double pe_basis(double energy_kev);

// Tabulated source spectrum: photon counts per energy bin.
//
// Basis function values are cached per bin so the forward model only needs
// one exponential per bin.
class Spectrum {
 public:
  // Validates: at least one bin, energies > 0 and strictly increasing,
  // counts >= 0 with positive total. Throws DomainError otherwise.
  Spectrum(std::vector<double> energies_kev, std::vector<double> counts);

  static Spectrum monochromatic(double energy_kev);
  // Parses `energy<TAB>count` lines; '#' starts a comment.
  static Spectrum parse(std::string_view text);
  static Spectrum load(const std::filesystem::path& path);
  // Built-in 1-keV triangle spectra for 95 and 130 kVp tubes.
  static Spectrum builtin(int kvp);

  std::span<const double> energies() const { return energies_; }
  std::span<const double> counts() const { return counts_; }
  std::span<const double> compton_basis() const { return f_kn_; }
  std::span<const double> pe_basis() const { return f_p_; }
  double total() const { return total_; }
  double log_total() const { return log_total_; }
  std::size_t size() const { return energies_.size(); }

  // Count-weighted means of the basis functions over the spectrum.
  double mean_compton() const;
  double mean_pe() const;

  std::string to_text() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<double> energies_;
  std::vector<double> counts_;
  std::vector<double> f_kn_;
  std::vector<double> f_p_;
  double total_ = 0.0;
  double log_total_ = 0.0;
};

struct RayIntegralPair {
  double compton = 0.0;  // a_c
  double photo = 0.0;    // a_p
};

struct LogProjectionPair {
  double high = 0.0;  // m_h
  double low = 0.0;   // m_l
};

struct ForwardValue {
  double value = 0.0;      // m
  double d_compton = 0.0;  // dm/da_c
  double d_photo = 0.0;    // dm/da_p
};

// m = -ln sum_i S_i exp(-f_KN(E_i) a_c - f_p(E_i) a_p) + ln sum_i S_i,
// evaluated with a log-sum-exp shift so no bin underflows to zero.
// Throws SaturationError if the result is not finite.
double forward_f(const RayIntegralPair& a, const Spectrum& spectrum);

// forward_f together with its analytic partial derivatives.
ForwardValue forward_f_jacobian(const RayIntegralPair& a, const Spectrum& spectrum);

// The two spectra of a dual-energy scan.
struct SpectrumPair {
  Spectrum high;
  Spectrum low;
};

}  // namespace dect
