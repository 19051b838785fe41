#include "dect/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "dect/difference.hpp"
#include "dect/error.hpp"
#include "dect/vector_ops.hpp"
#include "fft.hpp"

namespace dect {

StackedSystem::StackedSystem(const Projector* projector, int side, bool with_difference, bool with_identity)
    : projector_(projector), side_(side), with_difference_(with_difference), with_identity_(with_identity) {
  if (side < 1) throw DimensionError("stacked system: side must be >= 1");
  if (projector_ && projector_->geometry().image_side != side) {
    throw DimensionError("stacked system: projector geometry does not match side");
  }
}

StackedSystem StackedSystem::full(const Projector& projector) {
  return StackedSystem(&projector, projector.geometry().image_side, true, true);
}

StackedSystem StackedSystem::identity_only(int side) { return StackedSystem(nullptr, side, false, true); }

void StackedSystem::normal_apply(std::span<const double> x, std::span<double> out, const NormalParts* parts) const {
  const std::size_t n = pixels();
  if (x.size() != n || out.size() != n) throw DimensionError("normal_apply: image size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  if (projector_) {
    std::vector<double> rx_local;
    std::span<double> rx;
    if (parts && !parts->projection.empty()) {
      rx = parts->projection;
    } else {
      rx_local.resize(projector_->geometry().ray_count());
      rx = rx_local;
    }
    projector_->forward(x, rx);
    projector_->back(rx, out);
    if (parts && !parts->normal_project.empty()) std::copy(out.begin(), out.end(), parts->normal_project.begin());
  }
  if (with_difference_) {
    Image xi(side_, side_);
    std::copy(x.begin(), x.end(), xi.values().begin());
    const auto d = difference(xi);
    Image dtd(side_, side_);
    difference_adjoint(d, dtd);
    vec::axpy(1.0, dtd.values(), out);
  }
  if (with_identity_) vec::axpy(1.0, x, out);
}

Image StackedSystem::normal_apply(const Image& x) const {
  Image out(side_, side_);
  normal_apply(x.values(), out.values());
  return out;
}

Image StackedSystem::adjoint_apply(std::span<const double> a, std::span<const double> y,
                                   std::span<const double> z) const {
  Image out(side_, side_);
  if (projector_ && !a.empty()) projector_->back(a, out.values());
  if (with_difference_ && !y.empty()) {
    Image dty(side_, side_);
    difference_adjoint(y, dty);
    vec::axpy(1.0, dty.values(), out.values());
  }
  if (with_identity_ && !z.empty()) vec::axpy(1.0, z, out.values());
  return out;
}

CgResult conjugate_gradient(const LinearMap& op, const LinearMap& preconditioner, std::span<const double> rhs,
                            std::span<const double> x0, const CgOptions& options) {
  const std::size_t n = x0.size();
  CgResult res;
  res.x.assign(x0.begin(), x0.end());
  std::vector<double> r(n), z, p(n), q(n);

  double rhs_norm = options.rhs_norm;
  if (!options.initial_residual.empty()) {
    vec::check_same(options.initial_residual.size(), n);
    std::copy(options.initial_residual.begin(), options.initial_residual.end(), r.begin());
  } else {
    vec::check_same(rhs.size(), n);
    op(res.x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - q[i];
    rhs_norm = vec::norm2(rhs);
  }
  for (double v : r) {
    if (!std::isfinite(v)) throw DomainError("cg: non-finite right-hand side");
  }

  double r_norm = vec::norm2(r);
  res.residual_history.push_back(r_norm);
  const double threshold = options.tol * rhs_norm;
  if (r_norm == 0.0 || (options.tol > 0.0 && r_norm <= threshold)) {
    res.converged = true;
    return res;
  }

  auto precondition = [&](std::span<const double> in) -> std::span<const double> {
    if (!preconditioner) return in;
    z.resize(n);
    preconditioner(in, z);
    return z;
  };

  auto zr = precondition(r);
  std::copy(zr.begin(), zr.end(), p.begin());
  double rz = vec::dot(r, zr);

  for (int it = 0; it < options.max_iters; ++it) {
    op(p, q);
    const double curvature = vec::dot(p, q);
    if (!(curvature > 0.0)) {
      throw NumericalBreakdown("cg: non-positive curvature p'Ap = " + std::to_string(curvature));
    }
    const double alpha = rz / curvature;
    vec::axpy(alpha, p, res.x);
    vec::axpy(-alpha, q, r);
    if (options.on_step) options.on_step(alpha);
    ++res.iterations;

    r_norm = vec::norm2(r);
    res.residual_history.push_back(r_norm);
    if (r_norm == 0.0 || (options.tol > 0.0 && r_norm <= threshold)) {
      res.converged = true;
      break;
    }
    zr = precondition(r);
    const double rz_next = vec::dot(r, zr);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = zr[i] + beta * p[i];
  }
  return res;
}

namespace {

CgResult run_solver(const StackedSystem& system, const Preconditioner* prec, const Image& rhs, const Image& x0,
                    int max_iters, double tol) {
  if (!(tol > 0.0)) throw DomainError("cg_solve: tol must be positive");
  if (rhs.size() != system.pixels() || x0.size() != system.pixels()) {
    throw DimensionError("cg_solve: image size mismatch");
  }
  if (prec && prec->side() != system.side()) throw DimensionError("pcg_solve: preconditioner size mismatch");
  LinearMap op = [&](std::span<const double> in, std::span<double> out) { system.normal_apply(in, out); };
  LinearMap m;
  if (prec) m = [prec](std::span<const double> in, std::span<double> out) { prec->apply(in, out); };
  CgOptions opt;
  opt.max_iters = max_iters;
  opt.tol = tol;
  return conjugate_gradient(op, m, rhs.values(), x0.values(), opt);
}

}  // namespace

CgResult cg_solve(const StackedSystem& system, const Image& rhs, const Image& x0, int max_iters, double tol) {
  return run_solver(system, nullptr, rhs, x0, max_iters, tol);
}

CgResult pcg_solve(const StackedSystem& system, const Preconditioner& prec, const Image& rhs, const Image& x0,
                   int max_iters, double tol) {
  return run_solver(system, &prec, rhs, x0, max_iters, tol);
}

Preconditioner::Preconditioner(int side, std::vector<double> gains, Image psf)
    : side_(side), gains_(std::move(gains)), psf_(std::move(psf)), fft_(std::make_unique<detail::Fft2d>(side, side)) {
  if (gains_.size() != static_cast<std::size_t>(side) * side) throw DimensionError("preconditioner: gain size");
  for (double g : gains_) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw DomainError("preconditioner: gains must be finite and >= 0");
  }
}

Preconditioner::~Preconditioner() = default;
Preconditioner::Preconditioner(Preconditioner&&) noexcept = default;
Preconditioner& Preconditioner::operator=(Preconditioner&&) noexcept = default;

namespace {

// PSF circularly shifted so the impulse location lands on index (0, 0).
std::vector<detail::Complex> centred_spectrum(const Image& psf, const detail::Fft2d& fft) {
  const int n = psf.rows();
  const int centre = n / 2;
  std::vector<detail::Complex> buf(static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const int rs = (r - centre + n) % n, cs = (c - centre + n) % n;
      buf[static_cast<std::size_t>(rs) * n + cs] = psf(r, c);
    }
  }
  fft.forward(buf);
  return buf;
}

}  // namespace

Preconditioner Preconditioner::build(const StackedSystem& system, double clamp) {
  const int n = system.side();
  Image impulse(n, n);
  impulse(n / 2, n / 2) = 1.0;
  Image psf = system.normal_apply(impulse);

  detail::Fft2d fft(n, n);
  const auto spec = centred_spectrum(psf, fft);
  double peak = 0.0;
  for (const auto& v : spec) peak = std::max(peak, std::abs(v));
  if (!(peak > 0.0)) throw DomainError("preconditioner: degenerate system (zero PSF)");
  const double floor_mag = clamp * peak;
  std::vector<double> gains(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) gains[i] = 1.0 / std::max(std::abs(spec[i]), floor_mag);
  return Preconditioner(n, std::move(gains), std::move(psf));
}

Image Preconditioner::gains_image() const {
  Image img(side_, side_);
  std::copy(gains_.begin(), gains_.end(), img.values().begin());
  return img;
}

std::vector<double> Preconditioner::psf_spectrum_magnitude() const {
  if (psf_.size() == 0) return {};
  const auto spec = centred_spectrum(psf_, *fft_);
  std::vector<double> mag(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) mag[i] = std::abs(spec[i]);
  return mag;
}

void Preconditioner::apply(std::span<const double> in, std::span<double> out) const {
  const std::size_t n = gains_.size();
  if (in.size() != n || out.size() != n) throw DimensionError("preconditioner: image size mismatch");
  std::vector<detail::Complex> buf(in.begin(), in.end());
  fft_->forward(buf);
  for (std::size_t i = 0; i < n; ++i) buf[i] *= gains_[i];
  fft_->inverse(buf);
  const double norm = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real() * norm;
}

}  // namespace dect
