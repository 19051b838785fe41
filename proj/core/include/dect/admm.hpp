#pragma once

// ADMM reconstruction of Compton / photoelectric images from dual-energy
// log projections. Two splittings share the state layout:
//   proposed: v = [a; y; z] = [R; D; I] x, with x solved by (P)CG and a by
//             per-ray penalised decomposition;
//   baseline: v = [y; z] = [D; I] x, with x updated by Gauss-Newton/LM on
//             the full nonlinear data term.

#include <chrono>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dect/decompose.hpp"
#include "dect/geometry.hpp"
#include "dect/linsolve.hpp"
#include "dect/physics.hpp"
#include "dect/projector.hpp"

namespace dect {

enum class Method { kCdmFbp, kAdmmLm, kAdmmCg, kAdmmPcg };
std::string_view to_string(Method method);
// "cdm-fbp", "admm-lm", "admm-cg" or "admm-pcg"; throws ConfigError.
Method parse_method(std::string_view name);

struct AdmmConfig {
  Method method = Method::kAdmmPcg;
  double lambda_c = 1e-5;  // TV weights
  double lambda_p = 1e-5;
  double rho0 = 1e-3;
  double tau = 2.0;  // penalty growth factor
  double mu = 10.0;  // residual balance threshold
  bool adaptive_rho = true;
  int cg_iters = 5;     // n
  int lm_iters = 1;     // m (baseline only)
  int udm_iters = 50;   // per-ray LM iterations in the decomposition step
  int max_iters = 100;
  double tol = 1e-4;    // relative x change, both bases
  double pe_init_scale = 1e3;  // x_p initial = scale * x_c initial
  // The solver carries x_p, a_p, y_p, z_p and u_p in multiples of this many
  // keV^3/cm; lambda_p and rho_p act in those units.
  double pe_unit = 1e3;

  bool proposed() const { return method == Method::kAdmmCg || method == Method::kAdmmPcg; }
  bool preconditioned() const { return method == Method::kAdmmPcg; }
  // Throws ConfigError.
  void validate() const;
};

// Per-basis ADMM variables plus cached projections of them. The caches let
// an iteration of the proposed method run on 2n forward and 2(n+1) adjoint
// projections for both bases together.
struct BasisState {
  Image x;
  Sinogram a;              // proposed method only
  std::vector<double> y;   // 2N stacked differences
  Image z;
  Sinogram ua;
  std::vector<double> uy;
  Image uz;
  double rho = 0.0;
  double lambda = 0.0;
  double unit = 1.0;  // physical value of one state unit

  Sinogram rx;    // R x
  Image rt_rx;    // R^T R x (proposed only)
  Image rt_a;     // R^T a   (proposed only)
  Image rt_ua;    // R^T u^a (proposed only)
  double lm_damping = 1e-3;  // baseline LM damping, carried across iterations
};

struct AdmmState {
  BasisState compton;
  BasisState photo;
  int iteration = 0;
};

// Soft threshold sign(v) max(|v| - kappa, 0).
inline double shrinkage(double v, double kappa) {
  if (v > kappa) return v - kappa;
  if (v < -kappa) return v + kappa;
  return 0.0;
}

// y = shrinkage(D x - u^y, lambda / rho). `dx` is D x.
void update_y(BasisState& s, std::span<const double> dx);
// z = max(0, x - u^z).
void update_z(BasisState& s);
// u += v - A x blockwise; keeps R^T u^a in step when the a-block is present.
void update_duals(BasisState& s, std::span<const double> dx, bool with_a);

// Auxiliaries before the current iteration, for the dual residual.
struct AuxiliaryHistory {
  Image rt_a;  // R^T a_prev (empty without the a-block)
  std::vector<double> y;
  Image z;
};
AuxiliaryHistory snapshot_auxiliaries(const BasisState& s, bool with_a);

struct Residuals {
  double primal = 0.0;  // ||v - A x||
  double dual = 0.0;    // rho ||A^T (v - v_prev)||
  // Per-block parts: primal ||a - Rx||, ||y - Dx||, ||z - x||;
  // dual rho ||R^T da||, rho ||D^T dy||, rho ||dz||.
  double primal_a = 0.0, primal_y = 0.0, primal_z = 0.0;
  double dual_a = 0.0, dual_y = 0.0, dual_z = 0.0;
};
Residuals residuals(const BasisState& s, const AuxiliaryHistory& prev, std::span<const double> dx, bool with_a);

// tau * rho if r > mu s; rho / tau if s > mu r; rho otherwise.
double update_rho(double rho, double primal, double dual, double tau, double mu);
// Moves s to penalty rho_new, rescaling the scaled duals by rho / rho_new.
void rescale_penalty(BasisState& s, double rho_new, bool with_a);

// n (P)CG iterations on (R^T R + D^T D + I) x = A^T (v + u), warm-started at
// x; R x and R^T R x are carried along without extra projections.
CgResult reconstruct_x(BasisState& s, const StackedSystem& system, const Preconditioner* prec, int iterations);

struct AdmmInputs {
  const SinogramPair* measured = nullptr;
  const SinogramPair* weights = nullptr;
  const SpectrumPair* spectra = nullptr;
  const Projector* projector = nullptr;
  // Unattenuated detector count N0. The data term weighs rays by
  // weights / N0, i.e. by detected transmission.
  double blank_counts = 1.0;
  const BasisImage* reference = nullptr;  // for e(x) telemetry
  const Image* roi = nullptr;
};

// Penalised decomposition with anchors R x - u^a; then R^T a is refreshed
// (one adjoint projection per basis).
DecompositionReport decompose_a(AdmmState& state, const AdmmInputs& inputs, int udm_iters);

struct LmUpdateReport {
  int accepted = 0;
  int rejected = 0;
  int stalled = 0;  // LM iterations that found no descent step
  double objective_compton = 0.0;
  double objective_photo = 0.0;
};

// Objective of the baseline x-subproblem for one basis, given R x of both:
// 1/2 sum_s w_s (f_s - m_s)^2 + rho/2 (||D x - y - u^y||^2 + ||x - z - u^z||^2).
double lm_objective(const AdmmState& state, bool photo, const AdmmInputs& inputs);

// Baseline primal step: m Gauss-Newton/LM iterations on x_c, then on x_p,
// each solving its damped system with n CG iterations.
LmUpdateReport lm_primal_update(AdmmState& state, const AdmmInputs& inputs, int lm_iters, int cg_iters);

struct IterationRecord {
  int iteration = 0;
  double e_compton_db = 0.0;  // NaN without a reference
  double e_photo_db = 0.0;
  Residuals res_compton;
  Residuals res_photo;
  double rho_compton = 0.0;  // after the update
  double rho_photo = 0.0;
  OpCounts ops;         // cumulative since the start of run
  double wall_ms = 0.0;  // this iteration
  double change_compton = 0.0;  // ||x^{k+1} - x^k|| / ||x^k||
  double change_photo = 0.0;
  std::size_t failed_rays = 0;
};

void write_telemetry_header(std::ostream& out);
void write_telemetry_row(std::ostream& out, const IterationRecord& record);

struct AdmmResult {
  BasisImage images;
  AdmmState state;
  std::vector<IterationRecord> records;
  OpCounts init_ops;                // spent on initialisation
  DecompositionReport init_report;  // CDM
  DecompositionReport last_report;  // last decomposition step
  bool converged = false;
  std::string stop_reason;
};

class AdmmSolver {
 public:
  AdmmSolver(AdmmConfig config, AdmmInputs inputs);
  ~AdmmSolver();

  // CDM decomposition, FBP of a_c, x_p = scale * x_c (FBP of a_p for
  // cdm-fbp), y = D x, z = max(x, 0), u = 0, caches filled.
  void initialize();
  // One iteration in the order x, a, y, z, u, residuals, rho.
  IterationRecord step();

  const AdmmState& state() const { return state_; }
  AdmmState& state() { return state_; }
  const AdmmConfig& config() const { return config_; }
  const DecompositionReport& init_report() const { return init_report_; }
  const DecompositionReport& last_report() const { return last_report_; }
  const Preconditioner* preconditioner() const { return prec_.get(); }

 private:
  AdmmConfig config_;
  AdmmInputs inputs_;
  StackedSystem system_;
  std::unique_ptr<Preconditioner> prec_;
  SinogramPair scaled_weights_;
  AdmmState state_;
  DecompositionReport init_report_;
  DecompositionReport last_report_;
  OpCounts start_;
  bool initialized_ = false;
};

// State images converted to physical units (cm^-1, keV^3/cm).
BasisImage physical_images(const AdmmState& state);

// Initialises and iterates until the relative change of both images drops
// below tol or max_iters is reached. `on_record` sees each row as soon as it
// exists, so telemetry survives an exception thrown later.
AdmmResult run(const AdmmConfig& config, const AdmmInputs& inputs,
               const std::function<void(const IterationRecord&)>& on_record = {});

}  // namespace dect
