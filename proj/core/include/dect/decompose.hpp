#pragma once

// Projection-domain dual-energy decomposition: per-ray two-variable
// Levenberg-Marquardt fits of Compton/photoelectric line integrals to a
// measured log-projection pair.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "dect/geometry.hpp"
#include "dect/physics.hpp"
#include "dect/projector.hpp"

namespace dect {

// Diagonal of the statistical weight matrix for one ray (detected counts).
struct RayWeight {
  double high = 0.0;
  double low = 0.0;
};

struct LmOptions {
  int max_iters = 50;
  double initial_damping = 1e-3;
  double damping_factor = 10.0;
  // Converged when each component of the undamped Gauss-Newton step is
  // within step_tol * (1 + |a|).
  double step_tol = 1e-10;
};

// One penalised (unconstrained) decomposition:
//   1/2 sum_s w_s (f_s(a) - m_s)^2 + sum_k rho_k/2 (a_k - anchor_k)^2
struct DecompositionProblem {
  LogProjectionPair measured;
  RayWeight weight;
  double rho_c = 0.0;
  double rho_p = 0.0;
  RayIntegralPair anchor;
};

enum class RayStatus : std::uint8_t { kConverged, kMaxIterations, kNonFinite };
std::string_view to_string(RayStatus status);

struct RaySolution {
  RayIntegralPair a;
  RayStatus status = RayStatus::kConverged;
  int iterations = 0;
  int evaluations = 0;  // forward-model (value or Jacobian) evaluations, per spectrum
  double objective = 0.0;
  double gradient_norm = 0.0;

  bool converged() const { return status == RayStatus::kConverged; }
};

// Nonnegative (projected) fit, started from (m_h / mean f_KN, 0).
RaySolution decompose_ray_cdm(const LogProjectionPair& measured, const RayWeight& weight,
                              const SpectrumPair& spectra, const LmOptions& options = {});

// Penalised fit without sign constraint, started from the anchor.
RaySolution decompose_ray_udm(const DecompositionProblem& problem, const SpectrumPair& spectra,
                              const LmOptions& options = {});

// Per-ray objective of decompose_ray_udm (also the CDM cost with rho = 0).
double decomposition_objective(const DecompositionProblem& problem, const RayIntegralPair& a,
                               const SpectrumPair& spectra);

enum class DecompositionMode { kConstrained, kPenalized };

struct DecompositionInputs {
  const SinogramPair* measured = nullptr;
  const SinogramPair* weights = nullptr;
  // Penalised mode only: anchors (compton, photo) and penalties.
  const Sinogram* anchor_compton = nullptr;
  const Sinogram* anchor_photo = nullptr;
  double rho_c = 0.0;
  double rho_p = 0.0;
};

struct RayFailure {
  std::size_t ray = 0;
  RayStatus status = RayStatus::kMaxIterations;
};

struct DecompositionReport {
  std::vector<RayFailure> failures;  // ascending ray index
  std::uint64_t evaluations = 0;
  std::uint64_t iterations = 0;

  // Writes `ray_index<TAB>reason` lines.
  void write(std::ostream& out) const;
};

struct DecompositionResult {
  Sinogram compton;
  Sinogram photo;
  DecompositionReport report;
};

// Applies the per-ray solver to every ray, data-parallel. The result is
// bitwise identical to a serial loop for any thread count. When `counters`
// is given, the batch forward-model counter advances by
// ceil(total evaluations / rays): one unit is f(.) or its Jacobian applied
// for one spectrum across the whole sinogram.
DecompositionResult decompose_all(const DecompositionInputs& inputs, const SpectrumPair& spectra,
                                  DecompositionMode mode, const LmOptions& options = {},
                                  OpCounters* counters = nullptr);

}  // namespace dect
