#pragma once

// Conjugate-gradient solvers for the tomographic subproblem
//   min_x || [a; y; z] - [R; D; I] x ||^2
// via its normal equations (R^T R + D^T D + I) x = R^T a + D^T y + z, and
// the PSF-based frequency-domain preconditioner.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dect/geometry.hpp"
#include "dect/projector.hpp"

namespace dect {

namespace detail {
class Fft2d;
}

// Side outputs of one normal-operator application, for callers that track
// R x incrementally instead of re-projecting.
struct NormalParts {
  std::span<double> projection;      // R x (sinogram sized)
  std::span<double> normal_project;  // R^T R x (image sized)
};

// Matrix-free A = [R; D; I] with any block switched off.
class StackedSystem {
 public:
  static StackedSystem full(const Projector& projector);
  static StackedSystem identity_only(int side);
  StackedSystem(const Projector* projector, int side, bool with_difference, bool with_identity);

  int side() const { return side_; }
  std::size_t pixels() const { return static_cast<std::size_t>(side_) * side_; }
  const Projector* projector() const { return projector_; }
  bool has_projection() const { return projector_ != nullptr; }
  bool has_difference() const { return with_difference_; }
  bool has_identity() const { return with_identity_; }

  // out = (R^T R + D^T D + I) x over the enabled blocks.
  void normal_apply(std::span<const double> x, std::span<double> out, const NormalParts* parts = nullptr) const;
  Image normal_apply(const Image& x) const;

  // A^T [a; y; z]; absent blocks (empty spans) contribute nothing.
  Image adjoint_apply(std::span<const double> a, std::span<const double> y, std::span<const double> z) const;

 private:
  const Projector* projector_;
  int side_;
  bool with_difference_;
  bool with_identity_;
};

// Generic SPD operator and preconditioner callbacks: out = Op(in).
using LinearMap = std::function<void(std::span<const double>, std::span<double>)>;

struct CgOptions {
  int max_iters = 100;
  // Stop when ||r|| <= tol * ||rhs||. Zero runs exactly max_iters iterations
  // (or until the residual is exactly zero).
  double tol = 1e-10;
  // Warm start: residual rhs - A x0 supplied by the caller (saves one
  // operator application), together with ||rhs|| for the stopping rule.
  std::span<const double> initial_residual = {};
  double rhs_norm = 0.0;
  // Called after every update x += alpha * p, right after the operator was
  // applied to that p.
  std::function<void(double alpha)> on_step = {};
};

struct CgResult {
  std::vector<double> x;
  int iterations = 0;
  std::vector<double> residual_history;  // ||r_k||_2, k = 0..iterations
  bool converged = false;
};

// Preconditioned CG; `preconditioner` may be empty (plain CG).
// Throws NumericalBreakdown when p'Ap <= 0 for a nonzero direction.
CgResult conjugate_gradient(const LinearMap& op, const LinearMap& preconditioner, std::span<const double> rhs,
                            std::span<const double> x0, const CgOptions& options);

// Frequency-domain inverse filter of the PSF of the normal operator.
class Preconditioner {
 public:
  static constexpr double kClamp = 1e-4;

  // PSF = normal_apply(one-hot at (side/2, side/2)); gains = 1 / max(|F|, eps * max|F|).
  static Preconditioner build(const StackedSystem& system, double clamp = kClamp);
  // Gains supplied directly (side x side, unshifted DFT order).
  Preconditioner(int side, std::vector<double> gains, Image psf = {});
  ~Preconditioner();
  Preconditioner(Preconditioner&&) noexcept;
  Preconditioner& operator=(Preconditioner&&) noexcept;

  int side() const { return side_; }
  std::span<const double> gains() const { return gains_; }
  Image gains_image() const;
  const Image& psf() const { return psf_; }
  // Complex spectrum of the centred PSF (for inspection/tests), DFT order.
  std::vector<double> psf_spectrum_magnitude() const;

  // out = IFFT2(gains * FFT2(in)).
  void apply(std::span<const double> in, std::span<double> out) const;

 private:
  int side_ = 0;
  std::vector<double> gains_;
  Image psf_;
  std::unique_ptr<detail::Fft2d> fft_;
};

CgResult cg_solve(const StackedSystem& system, const Image& rhs, const Image& x0, int max_iters, double tol);
CgResult pcg_solve(const StackedSystem& system, const Preconditioner& prec, const Image& rhs, const Image& x0,
                   int max_iters, double tol);

}  // namespace dect
