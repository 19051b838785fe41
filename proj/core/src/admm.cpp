#include "dect/admm.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "dect/difference.hpp"
#include "dect/error.hpp"
#include "dect/metrics.hpp"
#include "dect/vector_ops.hpp"

namespace dect {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kCdmFbp:
      return "cdm-fbp";
    case Method::kAdmmLm:
      return "admm-lm";
    case Method::kAdmmCg:
      return "admm-cg";
    case Method::kAdmmPcg:
      return "admm-pcg";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::kCdmFbp, Method::kAdmmLm, Method::kAdmmCg, Method::kAdmmPcg}) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "' (expected cdm-fbp, admm-lm, admm-cg or admm-pcg)");
}

void AdmmConfig::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
  };
  if (!(lambda_c >= 0.0) || !(lambda_p >= 0.0)) throw ConfigError("lambda must be >= 0");
  positive(rho0, "rho0");
  positive(tol, "tol");
  positive(pe_init_scale, "pe_init_scale");
  positive(pe_unit, "pe_unit");
  if (!(tau > 1.0)) throw ConfigError("tau must be > 1");
  if (!(mu > 1.0)) throw ConfigError("mu must be > 1");
  if (cg_iters < 0) throw ConfigError("cg_iters must be >= 0");
  if (lm_iters < 1) throw ConfigError("lm_iters must be >= 1");
  if (udm_iters < 1) throw ConfigError("udm_iters must be >= 1");
  if (max_iters < 0) throw ConfigError("max_iters must be >= 0");
}

namespace {

Image dt_apply(std::span<const double> d, int side) { return difference_adjoint(d, side, side); }

double sum_squares(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

}  // namespace

void update_y(BasisState& s, std::span<const double> dx) {
  vec::check_same(dx.size(), s.uy.size());
  const double kappa = s.lambda / s.rho;
  s.y.resize(dx.size());
  for (std::size_t i = 0; i < dx.size(); ++i) s.y[i] = shrinkage(dx[i] - s.uy[i], kappa);
}

void update_z(BasisState& s) {
  vec::check_same(s.x.size(), s.uz.size());
  if (!s.z.same_shape(s.x)) s.z = Image(s.x.rows(), s.x.cols());
  for (std::size_t i = 0; i < s.x.size(); ++i) s.z[i] = std::max(0.0, s.x[i] - s.uz[i]);
}

void update_duals(BasisState& s, std::span<const double> dx, bool with_a) {
  vec::check_same(dx.size(), s.y.size());
  if (with_a) {
    vec::check_same(s.a.size(), s.rx.size());
    for (std::size_t i = 0; i < s.a.size(); ++i) s.ua[i] += s.a[i] - s.rx[i];
    for (std::size_t i = 0; i < s.x.size(); ++i) s.rt_ua[i] += s.rt_a[i] - s.rt_rx[i];
  }
  for (std::size_t i = 0; i < dx.size(); ++i) s.uy[i] += s.y[i] - dx[i];
  for (std::size_t i = 0; i < s.x.size(); ++i) s.uz[i] += s.z[i] - s.x[i];
}

AuxiliaryHistory snapshot_auxiliaries(const BasisState& s, bool with_a) {
  AuxiliaryHistory h;
  if (with_a) h.rt_a = s.rt_a;
  h.y = s.y;
  h.z = s.z;
  return h;
}

Residuals residuals(const BasisState& s, const AuxiliaryHistory& prev, std::span<const double> dx, bool with_a) {
  const int side = s.x.rows();
  Residuals r;
  double pa = 0.0, py = 0.0, pz = 0.0;
  if (with_a) {
    for (std::size_t i = 0; i < s.a.size(); ++i) pa += (s.a[i] - s.rx[i]) * (s.a[i] - s.rx[i]);
  }
  for (std::size_t i = 0; i < dx.size(); ++i) py += (s.y[i] - dx[i]) * (s.y[i] - dx[i]);
  for (std::size_t i = 0; i < s.x.size(); ++i) pz += (s.z[i] - s.x[i]) * (s.z[i] - s.x[i]);
  r.primal_a = std::sqrt(pa);
  r.primal_y = std::sqrt(py);
  r.primal_z = std::sqrt(pz);
  r.primal = std::sqrt(pa + py + pz);

  std::vector<double> dy(s.y.size());
  for (std::size_t i = 0; i < dy.size(); ++i) dy[i] = s.y[i] - prev.y[i];
  const Image dty = dt_apply(dy, side);
  std::vector<double> total(s.x.size()), block_a(s.x.size(), 0.0), dz(s.x.size());
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (with_a) block_a[i] = s.rt_a[i] - prev.rt_a[i];
    dz[i] = s.z[i] - prev.z[i];
    total[i] = block_a[i] + dty[i] + dz[i];
  }
  r.dual_a = s.rho * vec::norm2(block_a);
  r.dual_y = s.rho * vec::norm2(dty.values());
  r.dual_z = s.rho * vec::norm2(dz);
  r.dual = s.rho * vec::norm2(total);
  return r;
}

double update_rho(double rho, double primal, double dual, double tau, double mu) {
  if (primal > mu * dual) return tau * rho;
  if (dual > mu * primal) return rho / tau;
  return rho;
}

void rescale_penalty(BasisState& s, double rho_new, bool with_a) {
  if (!(rho_new > 0.0)) throw DomainError("penalty must stay positive");
  const double f = s.rho / rho_new;
  if (with_a) {
    vec::scale(f, s.ua.values());
    vec::scale(f, s.rt_ua.values());
  }
  vec::scale(f, s.uy);
  vec::scale(f, s.uz.values());
  s.rho = rho_new;
}

CgResult reconstruct_x(BasisState& s, const StackedSystem& system, const Preconditioner* prec, int iterations) {
  const std::size_t n = system.pixels();
  if (s.x.size() != n) throw DimensionError("reconstruct_x: image does not match the system");
  const bool with_a = system.has_projection();
  const int side = system.side();

  // rhs = A^T (v + u); residual = rhs - A^T A x from the cached projections.
  std::vector<double> rhs(n, 0.0), ax(n, 0.0);
  if (with_a) {
    for (std::size_t i = 0; i < n; ++i) {
      rhs[i] = s.rt_a[i] + s.rt_ua[i];
      ax[i] = s.rt_rx[i];
    }
  }
  if (system.has_difference()) {
    std::vector<double> t(s.y.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = s.y[i] + s.uy[i];
    vec::axpy(1.0, dt_apply(t, side).values(), rhs);
    vec::axpy(1.0, dt_apply(difference(s.x), side).values(), ax);
  }
  if (system.has_identity()) {
    for (std::size_t i = 0; i < n; ++i) {
      rhs[i] += s.z[i] + s.uz[i];
      ax[i] += s.x[i];
    }
  }
  std::vector<double> r0(n);
  for (std::size_t i = 0; i < n; ++i) r0[i] = rhs[i] - ax[i];

  std::vector<double> rp, rtrp;
  NormalParts parts;
  if (with_a) {
    rp.resize(s.rx.size());
    rtrp.resize(n);
    parts = {rp, rtrp};
  }
  LinearMap op = [&](std::span<const double> in, std::span<double> out) {
    system.normal_apply(in, out, with_a ? &parts : nullptr);
  };
  LinearMap m;
  if (prec) m = [prec](std::span<const double> in, std::span<double> out) { prec->apply(in, out); };

  CgOptions opt;
  opt.max_iters = iterations;
  opt.tol = 0.0;
  opt.initial_residual = r0;
  opt.rhs_norm = vec::norm2(rhs);
  if (with_a) {
    opt.on_step = [&](double alpha) {
      vec::axpy(alpha, rp, s.rx.values());
      vec::axpy(alpha, rtrp, s.rt_rx.values());
    };
  }
  CgResult res = conjugate_gradient(op, m, rhs, s.x.values(), opt);
  std::copy(res.x.begin(), res.x.end(), s.x.values().begin());
  return res;
}

DecompositionReport decompose_a(AdmmState& state, const AdmmInputs& inputs, int udm_iters) {
  BasisState& c = state.compton;
  BasisState& p = state.photo;
  Sinogram anchor_c = c.rx, anchor_p = p.rx;
  vec::axpy(-1.0, c.ua.values(), anchor_c.values());
  vec::axpy(-1.0, p.ua.values(), anchor_p.values());
  vec::scale(c.unit, anchor_c.values());
  vec::scale(p.unit, anchor_p.values());

  DecompositionInputs in;
  in.measured = inputs.measured;
  in.weights = inputs.weights;
  in.anchor_compton = &anchor_c;
  in.anchor_photo = &anchor_p;
  in.rho_c = c.rho / (c.unit * c.unit);
  in.rho_p = p.rho / (p.unit * p.unit);
  LmOptions opt;
  opt.max_iters = udm_iters;
  auto result = decompose_all(in, *inputs.spectra, DecompositionMode::kPenalized, opt,
                              &inputs.projector->counters());
  c.a = std::move(result.compton);
  p.a = std::move(result.photo);
  vec::scale(1.0 / c.unit, c.a.values());
  vec::scale(1.0 / p.unit, p.a.values());
  inputs.projector->back(c.a.values(), c.rt_a.values());
  inputs.projector->back(p.a.values(), p.rt_a.values());
  return std::move(result.report);
}

namespace {

// Per-ray data residuals and derivatives with respect to one basis.
struct DataTerms {
  double objective = 0.0;
  std::vector<double> gradient;  // sum_s w_s e_s J_s
  std::vector<double> curvature; // sum_s w_s J_s^2
};

// rx_c, rx_p in state units; derivatives are with respect to state units.
DataTerms data_terms(const Sinogram& rx_c, const Sinogram& rx_p, double unit_c, double unit_p, bool photo,
                     const AdmmInputs& in, bool derivatives) {
  const std::size_t rays = rx_c.size();
  const auto& m = *in.measured;
  const auto& w = *in.weights;
  DataTerms out;
  std::vector<double> contrib(rays);
  if (derivatives) {
    out.gradient.resize(rays);
    out.curvature.resize(rays);
  }
  std::vector<unsigned char> bad(rays, 0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rays); ++r) {
    const std::size_t i = static_cast<std::size_t>(r);
    const RayIntegralPair a{unit_c * rx_c[i], unit_p * rx_p[i]};
    const double unit = photo ? unit_p : unit_c;
    try {
      if (derivatives) {
        const ForwardValue fh = forward_f_jacobian(a, in.spectra->high);
        const ForwardValue fl = forward_f_jacobian(a, in.spectra->low);
        const double eh = fh.value - m.high[i], el = fl.value - m.low[i];
        const double jh = unit * (photo ? fh.d_photo : fh.d_compton);
        const double jl = unit * (photo ? fl.d_photo : fl.d_compton);
        contrib[i] = 0.5 * (w.high[i] * eh * eh + w.low[i] * el * el);
        out.gradient[i] = w.high[i] * eh * jh + w.low[i] * el * jl;
        out.curvature[i] = w.high[i] * jh * jh + w.low[i] * jl * jl;
      } else {
        const double eh = forward_f(a, in.spectra->high) - m.high[i];
        const double el = forward_f(a, in.spectra->low) - m.low[i];
        contrib[i] = 0.5 * (w.high[i] * eh * eh + w.low[i] * el * el);
      }
    } catch (const SaturationError&) {
      bad[i] = 1;
    }
  }
  for (std::size_t i = 0; i < rays; ++i) {
    if (bad[i]) {
      if (derivatives) {
        throw SaturationError("lm: forward model not finite", std::max(unit_c * rx_c[i], unit_p * rx_p[i]));
      }
      out.objective = std::numeric_limits<double>::infinity();
      return out;
    }
    out.objective += contrib[i];
  }
  return out;
}

// rho/2 (||D x - y - u^y||^2 + ||x - z - u^z||^2) and its residual blocks.
double prox_objective(const BasisState& s, std::span<const double> x, std::vector<double>* pdy,
                      std::vector<double>* pdz) {
  Image xi(s.x.rows(), s.x.cols());
  std::copy(x.begin(), x.end(), xi.values().begin());
  const auto dx = difference(xi);
  std::vector<double> ry(dx.size()), rz(x.size());
  for (std::size_t i = 0; i < dx.size(); ++i) ry[i] = dx[i] - s.y[i] - s.uy[i];
  for (std::size_t i = 0; i < x.size(); ++i) rz[i] = x[i] - s.z[i] - s.uz[i];
  const double v = 0.5 * s.rho * (sum_squares(ry) + sum_squares(rz));
  if (pdy) *pdy = std::move(ry);
  if (pdz) *pdz = std::move(rz);
  return v;
}

}  // namespace

double lm_objective(const AdmmState& state, bool photo, const AdmmInputs& inputs) {
  const BasisState& s = photo ? state.photo : state.compton;
  return data_terms(state.compton.rx, state.photo.rx, state.compton.unit, state.photo.unit, photo, inputs, false)
             .objective +
         prox_objective(s, s.x.values(), nullptr, nullptr);
}

LmUpdateReport lm_primal_update(AdmmState& state, const AdmmInputs& inputs, int lm_iters, int cg_iters) {
  constexpr int kMaxRetries = 10;
  const Projector& proj = *inputs.projector;
  const ScanGeometry& g = proj.geometry();
  const int side = g.image_side;
  const std::size_t n = g.pixel_count();
  const std::size_t rays = g.ray_count();
  LmUpdateReport report;

  for (bool photo : {false, true}) {
    BasisState& s = photo ? state.photo : state.compton;
    double objective = 0.0;
    for (int it = 0; it < lm_iters; ++it) {
      proj.forward(s.x.values(), s.rx.values());
      const double uc = state.compton.unit, up = state.photo.unit;
      DataTerms dt = data_terms(state.compton.rx, state.photo.rx, uc, up, photo, inputs, true);
      proj.counters().add_forward_model(4);

      // Gradient of data + proximal terms.
      std::vector<double> grad(n), pdy, pdz;
      proj.back(dt.gradient, grad);
      objective = dt.objective + prox_objective(s, s.x.values(), &pdy, &pdz);
      const Image dtpdy = dt_apply(pdy, side);
      for (std::size_t i = 0; i < n; ++i) grad[i] += s.rho * (dtpdy[i] + pdz[i]);
      std::vector<double> neg_grad(n);
      for (std::size_t i = 0; i < n; ++i) neg_grad[i] = -grad[i];

      double mean_w = 0.0;
      for (double v : dt.curvature) mean_w += v;
      mean_w /= static_cast<double>(rays);
      const double diag_scale = mean_w * static_cast<double>(g.angle_count()) * g.pixel_pitch * g.pixel_pitch *
                                    (g.pixel_pitch / g.detector_pitch) +
                                5.0 * s.rho;

      std::vector<double> rp(rays), rdelta(rays), wrp(rays);
      bool accepted = false;
      for (int attempt = 0; attempt < kMaxRetries && !accepted; ++attempt) {
        const double damping = s.lm_damping * diag_scale;
        LinearMap op = [&](std::span<const double> v, std::span<double> out) {
          proj.forward(v, rp);
          for (std::size_t i = 0; i < rays; ++i) wrp[i] = dt.curvature[i] * rp[i];
          proj.back(wrp, out);
          Image vi(side, side);
          std::copy(v.begin(), v.end(), vi.values().begin());
          const Image dtd = dt_apply(difference(vi), side);
          for (std::size_t i = 0; i < n; ++i) out[i] += s.rho * (dtd[i] + v[i]) + damping * v[i];
        };
        std::fill(rdelta.begin(), rdelta.end(), 0.0);
        CgOptions opt;
        opt.max_iters = cg_iters;
        opt.tol = 0.0;
        opt.initial_residual = neg_grad;
        opt.rhs_norm = vec::norm2(neg_grad);
        opt.on_step = [&](double alpha) { vec::axpy(alpha, rp, rdelta); };
        const std::vector<double> zero(n, 0.0);
        const CgResult step = conjugate_gradient(op, {}, neg_grad, zero, opt);
        if (step.iterations == 0) break;  // zero gradient: stationary

        std::vector<double> trial_x(n);
        for (std::size_t i = 0; i < n; ++i) trial_x[i] = s.x[i] + step.x[i];
        Sinogram trial_rx = s.rx;
        vec::axpy(1.0, rdelta, trial_rx.values());
        const Sinogram& rc = photo ? state.compton.rx : trial_rx;
        const Sinogram& rpe = photo ? trial_rx : state.photo.rx;
        const double trial_obj =
            data_terms(rc, rpe, uc, up, photo, inputs, false).objective + prox_objective(s, trial_x, nullptr, nullptr);
        proj.counters().add_forward_model(2);
        if (trial_obj < objective) {
          std::copy(trial_x.begin(), trial_x.end(), s.x.values().begin());
          s.rx = std::move(trial_rx);
          objective = trial_obj;
          s.lm_damping = std::max(s.lm_damping / 10.0, 1e-12);
          accepted = true;
          ++report.accepted;
        } else {
          s.lm_damping = std::min(s.lm_damping * 10.0, 1e12);
          ++report.rejected;
        }
      }
      if (!accepted) ++report.stalled;
    }
    (photo ? report.objective_photo : report.objective_compton) = objective;
  }
  return report;
}

void write_telemetry_header(std::ostream& out) {
  out << "iter,e_c_db,e_p_db,r_c,s_c,r_p,s_p,rho_c,rho_p,nR,nRt,nf,wall_ms\n";
}

void write_telemetry_row(std::ostream& out, const IterationRecord& r) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(10);
  out << r.iteration << ',' << r.e_compton_db << ',' << r.e_photo_db << ',' << r.res_compton.primal << ','
      << r.res_compton.dual << ',' << r.res_photo.primal << ',' << r.res_photo.dual << ',' << r.rho_compton << ','
      << r.rho_photo << ',' << r.ops.forward << ',' << r.ops.backward << ',' << r.ops.forward_model << ','
      << std::fixed << std::setprecision(3) << r.wall_ms << '\n';
  out.flags(flags);
  out.precision(prec);
}

AdmmSolver::AdmmSolver(AdmmConfig config, AdmmInputs inputs)
    : config_(std::move(config)),
      inputs_(std::move(inputs)),
      system_(inputs_.projector ? StackedSystem::full(*inputs_.projector) : StackedSystem::identity_only(1)) {
  config_.validate();
  if (!inputs_.projector || !inputs_.measured || !inputs_.weights || !inputs_.spectra) {
    throw ConfigError("admm: projector, measurements, weights and spectra are required");
  }
  const ScanGeometry& g = inputs_.projector->geometry();
  for (const Sinogram* s : {&inputs_.measured->high, &inputs_.measured->low, &inputs_.weights->high,
                            &inputs_.weights->low}) {
    if (!s->matches(g)) throw DimensionError("admm: sinogram shape does not match the geometry");
  }
  if (inputs_.reference) {
    if (!inputs_.reference->compton.matches(g) || !inputs_.reference->photo.matches(g)) {
      throw DimensionError("admm: reference image shape does not match the geometry");
    }
    if (vec::norm2(inputs_.reference->compton.values()) == 0.0 ||
        vec::norm2(inputs_.reference->photo.values()) == 0.0) {
      throw DomainError("admm: reference images must be nonzero");
    }
  }
  if (inputs_.roi && !inputs_.roi->matches(g)) throw DimensionError("admm: ROI shape does not match the geometry");
  if (!(inputs_.blank_counts > 0.0) || !std::isfinite(inputs_.blank_counts)) {
    throw ConfigError("admm: blank counts must be positive");
  }
  if (inputs_.blank_counts != 1.0) {
    scaled_weights_ = *inputs_.weights;
    vec::scale(1.0 / inputs_.blank_counts, scaled_weights_.high.values());
    vec::scale(1.0 / inputs_.blank_counts, scaled_weights_.low.values());
    inputs_.weights = &scaled_weights_;
    inputs_.blank_counts = 1.0;
  }
}

AdmmSolver::~AdmmSolver() = default;

void AdmmSolver::initialize() {
  const Projector& proj = *inputs_.projector;
  const ScanGeometry& g = proj.geometry();
  start_ = proj.counters().snapshot();

  DecompositionInputs in;
  in.measured = inputs_.measured;
  in.weights = inputs_.weights;
  LmOptions lm;
  lm.max_iters = config_.udm_iters;
  auto cdm = decompose_all(in, *inputs_.spectra, DecompositionMode::kConstrained, lm, &proj.counters());
  init_report_ = cdm.report;

  const double unit_p = config_.pe_unit;
  Image xc = fbp(cdm.compton, proj);
  Image xp;
  if (config_.method == Method::kCdmFbp) {
    xp = fbp(cdm.photo, proj);
    vec::scale(1.0 / unit_p, xp.values());
  } else {
    xp = xc;
    vec::scale(config_.pe_init_scale / unit_p, xp.values());
  }
  vec::scale(1.0 / unit_p, cdm.photo.values());

  const bool with_a = config_.proposed();
  auto init_basis = [&](BasisState& s, Image x, Sinogram a, double lambda, double unit) {
    s = BasisState{};
    s.unit = unit;
    s.x = std::move(x);
    s.rho = config_.rho0;
    s.lambda = lambda;
    s.y = difference(s.x);
    s.z = Image(g);
    for (std::size_t i = 0; i < s.x.size(); ++i) s.z[i] = std::max(0.0, s.x[i]);
    s.uy.assign(s.y.size(), 0.0);
    s.uz = Image(g);
    s.rx = proj.forward(s.x);
    if (with_a) {
      s.a = std::move(a);
      s.ua = Sinogram(g);
      s.rt_rx = proj.back(s.rx);
      s.rt_a = proj.back(s.a);
      s.rt_ua = Image(g);
    }
  };
  init_basis(state_.compton, std::move(xc), std::move(cdm.compton), config_.lambda_c, 1.0);
  init_basis(state_.photo, std::move(xp), std::move(cdm.photo), config_.lambda_p, unit_p);
  state_.iteration = 0;

  if (config_.preconditioned() && !prec_) prec_ = std::make_unique<Preconditioner>(Preconditioner::build(system_));
  initialized_ = true;
}

IterationRecord AdmmSolver::step() {
  if (!initialized_) initialize();
  if (config_.method == Method::kCdmFbp) throw ConfigError("cdm-fbp has no iterations");
  const auto t0 = std::chrono::steady_clock::now();
  const Projector& proj = *inputs_.projector;
  const bool with_a = config_.proposed();
  BasisState& c = state_.compton;
  BasisState& p = state_.photo;

  const Image xc_prev = c.x, xp_prev = p.x;
  const AuxiliaryHistory hc = snapshot_auxiliaries(c, with_a), hp = snapshot_auxiliaries(p, with_a);

  IterationRecord rec;
  if (with_a) {
    const Preconditioner* pre = config_.preconditioned() ? prec_.get() : nullptr;
    reconstruct_x(c, system_, pre, config_.cg_iters);
    reconstruct_x(p, system_, pre, config_.cg_iters);
    last_report_ = decompose_a(state_, inputs_, config_.udm_iters);
    rec.failed_rays = last_report_.failures.size();
  } else {
    lm_primal_update(state_, inputs_, config_.lm_iters, config_.cg_iters);
  }

  for (BasisState* s : {&c, &p}) {
    const auto dx = difference(s->x);
    update_y(*s, dx);
    update_z(*s);
    update_duals(*s, dx, with_a);
    const Residuals r = residuals(*s, s == &c ? hc : hp, dx, with_a);
    (s == &c ? rec.res_compton : rec.res_photo) = r;
    if (config_.adaptive_rho) {
      const double next = update_rho(s->rho, r.primal, r.dual, config_.tau, config_.mu);
      if (next != s->rho) rescale_penalty(*s, next, with_a);
    }
  }
  ++state_.iteration;

  auto change = [](const Image& now, const Image& prev) {
    const double base = vec::norm2(prev.values());
    const double d = vec::distance(now.values(), prev.values());
    if (base == 0.0) return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return d / base;
  };
  rec.iteration = state_.iteration;
  rec.change_compton = change(c.x, xc_prev);
  rec.change_photo = change(p.x, xp_prev);
  rec.rho_compton = c.rho;
  rec.rho_photo = p.rho;
  if (inputs_.reference) {
    rec.e_compton_db = error_db(c.x, inputs_.reference->compton, inputs_.roi);
    Image xp = p.x;
    vec::scale(p.unit, xp.values());
    rec.e_photo_db = error_db(xp, inputs_.reference->photo, inputs_.roi);
  } else {
    rec.e_compton_db = rec.e_photo_db = std::numeric_limits<double>::quiet_NaN();
  }
  rec.ops = proj.counters().snapshot() - start_;
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

BasisImage physical_images(const AdmmState& state) {
  BasisImage out{state.compton.x, state.photo.x};
  vec::scale(state.compton.unit, out.compton.values());
  vec::scale(state.photo.unit, out.photo.values());
  return out;
}

AdmmResult run(const AdmmConfig& config, const AdmmInputs& inputs,
               const std::function<void(const IterationRecord&)>& on_record) {
  AdmmSolver solver(config, inputs);
  const OpCounts before = inputs.projector->counters().snapshot();
  solver.initialize();
  AdmmResult result;
  result.init_ops = inputs.projector->counters().snapshot() - before;
  result.init_report = solver.init_report();
  result.stop_reason = "max_iters";

  const int iterations = config.method == Method::kCdmFbp ? 0 : config.max_iters;
  if (iterations == 0) result.stop_reason = "initialization";
  for (int k = 0; k < iterations; ++k) {
    IterationRecord rec = solver.step();
    result.records.push_back(rec);
    if (on_record) on_record(rec);
    if (rec.change_compton < config.tol && rec.change_photo < config.tol) {
      result.converged = true;
      result.stop_reason = "tolerance";
      break;
    }
  }
  result.last_report = solver.last_report();
  result.state = solver.state();
  result.images = physical_images(result.state);
  return result;
}

}  // namespace dect
