#include "dect/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "dect/error.hpp"

namespace dect {

std::string_view to_string(RayStatus status) {
  switch (status) {
    case RayStatus::kConverged:
      return "converged";
    case RayStatus::kMaxIterations:
      return "max_iterations";
    case RayStatus::kNonFinite:
      return "non_finite";
  }
  return "unknown";
}

namespace {

// Objective, gradient and Gauss-Newton Hessian of one ray at one point.
struct Local {
  double objective = 0.0;
  double e[2] = {0.0, 0.0};  // f_h - m_h, f_l - m_l
  double d[2] = {0.0, 0.0};  // a - anchor
  double noise = 0.0;  // rounding scale of objective changes at this point
  double g[2] = {0.0, 0.0};
  double h[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
};

Local linearize(const DecompositionProblem& p, const RayIntegralPair& a, const SpectrumPair& spectra) {
  const ForwardValue fh = forward_f_jacobian(a, spectra.high);
  const ForwardValue fl = forward_f_jacobian(a, spectra.low);
  const double eh = fh.value - p.measured.high;
  const double el = fl.value - p.measured.low;
  const double wh = p.weight.high, wl = p.weight.low;
  const double dc = a.compton - p.anchor.compton;
  const double dp = a.photo - p.anchor.photo;

  Local out;
  out.e[0] = eh;
  out.e[1] = el;
  out.d[0] = dc;
  out.d[1] = dp;
  // f carries absolute rounding of order eps * (|f| + ln sum S + 1).
  constexpr double eps = 8.0 * std::numeric_limits<double>::epsilon();
  const double sh = std::abs(fh.value) + std::abs(p.measured.high) + std::abs(spectra.high.log_total()) + 1.0;
  const double sl = std::abs(fl.value) + std::abs(p.measured.low) + std::abs(spectra.low.log_total()) + 1.0;
  out.noise = eps * (wh * std::abs(eh) * sh + wl * std::abs(el) * sl +
                     p.rho_c * std::abs(dc) * (std::abs(a.compton) + std::abs(p.anchor.compton)) +
                     p.rho_p * std::abs(dp) * (std::abs(a.photo) + std::abs(p.anchor.photo)));
  out.objective = 0.5 * (wh * eh * eh + wl * el * el) + 0.5 * (p.rho_c * dc * dc + p.rho_p * dp * dp);
  out.g[0] = wh * eh * fh.d_compton + wl * el * fl.d_compton + p.rho_c * dc;
  out.g[1] = wh * eh * fh.d_photo + wl * el * fl.d_photo + p.rho_p * dp;
  out.h[0][0] = wh * fh.d_compton * fh.d_compton + wl * fl.d_compton * fl.d_compton + p.rho_c;
  out.h[1][1] = wh * fh.d_photo * fh.d_photo + wl * fl.d_photo * fl.d_photo + p.rho_p;
  out.h[0][1] = out.h[1][0] = wh * fh.d_compton * fh.d_photo + wl * fl.d_compton * fl.d_photo;
  return out;
}

// next.objective - cur.objective, summed term by term as (u - v)(u + v) so
// that changes far below the objective's own rounding error still register.
double objective_change(const DecompositionProblem& p, const Local& cur, const Local& next) {
  auto diff = [](double u, double v) { return (u - v) * (u + v); };
  return 0.5 * (p.weight.high * diff(next.e[0], cur.e[0]) + p.weight.low * diff(next.e[1], cur.e[1]) +
                p.rho_c * diff(next.d[0], cur.d[0]) + p.rho_p * diff(next.d[1], cur.d[1]));
}

// Solves (H + lambda diag(H)) d = -g over the free variables. Variables with
// zero curvature, or pinned by the bound in constrained mode, get d = 0.
void damped_step(const Local& l, double lambda, const bool free_var[2], double step[2]) {
  double m[2][2];
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) m[i][j] = l.h[i][j];
    m[i][i] += lambda * l.h[i][i];
  }
  const bool use0 = free_var[0] && l.h[0][0] > 0.0;
  const bool use1 = free_var[1] && l.h[1][1] > 0.0;
  step[0] = step[1] = 0.0;
  if (use0 && use1) {
    const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if (det > 0.0) {
      step[0] = (-l.g[0] * m[1][1] + l.g[1] * m[0][1]) / det;
      step[1] = (-l.g[1] * m[0][0] + l.g[0] * m[1][0]) / det;
      return;
    }
    // Numerically singular even after damping: fall back to the diagonal.
    step[0] = -l.g[0] / m[0][0];
    step[1] = -l.g[1] / m[1][1];
  } else if (use0) {
    step[0] = -l.g[0] / m[0][0];
  } else if (use1) {
    step[1] = -l.g[1] / m[1][1];
  }
}

RaySolution solve(const DecompositionProblem& p, RayIntegralPair start, const SpectrumPair& spectra,
                  const LmOptions& opt, bool constrained) {
  constexpr double kMaxDamping = 1e16;
  RaySolution sol;
  sol.a = start;
  try {
    Local cur = linearize(p, sol.a, spectra);
    sol.evaluations += 4;
    double lambda = opt.initial_damping;
    sol.status = RayStatus::kMaxIterations;
    bool stalled = false;

    for (int it = 0; it < opt.max_iters; ++it) {
      bool free_var[2] = {true, true};
      if (constrained) {
        // Active set: a variable sitting on its bound with the gradient
        // pointing outward stays put.
        if (sol.a.compton <= 0.0 && cur.g[0] > 0.0) free_var[0] = false;
        if (sol.a.photo <= 0.0 && cur.g[1] > 0.0) free_var[1] = false;
      }
      // Converged once the undamped Gauss-Newton step is negligible, or a
      // trial just failed and the predicted gain is below objective rounding.
      double newton[2];
      damped_step(cur, 0.0, free_var, newton);
      const double gain = -0.5 * (cur.g[0] * newton[0] + cur.g[1] * newton[1]);
      if ((std::abs(newton[0]) <= opt.step_tol * (1.0 + std::abs(sol.a.compton)) &&
           std::abs(newton[1]) <= opt.step_tol * (1.0 + std::abs(sol.a.photo))) ||
          (stalled && gain <= cur.noise)) {
        sol.status = RayStatus::kConverged;
        break;
      }
      ++sol.iterations;

      double step[2];
      damped_step(cur, lambda, free_var, step);
      RayIntegralPair trial{sol.a.compton + step[0], sol.a.photo + step[1]};
      if (constrained) {
        trial.compton = std::max(0.0, trial.compton);
        trial.photo = std::max(0.0, trial.photo);
      }
      const Local next = linearize(p, trial, spectra);
      sol.evaluations += 4;

      const double change = objective_change(p, cur, next);
      const bool moved = trial.compton != sol.a.compton || trial.photo != sol.a.photo;
      if (change < 0.0 || (moved && change <= cur.noise + next.noise)) {
        sol.a = trial;
        cur = next;
        lambda = std::max(lambda / opt.damping_factor, 1e-12);
        stalled = false;
      } else {
        stalled = true;
        lambda *= opt.damping_factor;
        if (lambda > kMaxDamping) {
          // No representable descent step remains: minimum to working precision.
          sol.status = RayStatus::kConverged;
          break;
        }
      }
    }
    sol.objective = cur.objective;
    sol.gradient_norm = std::hypot(cur.g[0], cur.g[1]);
  } catch (const SaturationError&) {
    sol.status = RayStatus::kNonFinite;
  }
  return sol;
}

RayIntegralPair cdm_start(const LogProjectionPair& m, const SpectrumPair& spectra) {
  return {std::max(0.0, m.high / spectra.high.mean_compton()), 0.0};
}

}  // namespace

double decomposition_objective(const DecompositionProblem& problem, const RayIntegralPair& a,
                               const SpectrumPair& spectra) {
  return linearize(problem, a, spectra).objective;
}

RaySolution decompose_ray_cdm(const LogProjectionPair& measured, const RayWeight& weight,
                              const SpectrumPair& spectra, const LmOptions& options) {
  if (!(weight.high >= 0.0) || !(weight.low >= 0.0)) throw DomainError("cdm: weights must be nonnegative");
  if (!std::isfinite(measured.high) || !std::isfinite(measured.low)) {
    throw DomainError("cdm: measurements must be finite");
  }
  DecompositionProblem p;
  p.measured = measured;
  p.weight = weight;
  return solve(p, cdm_start(measured, spectra), spectra, options, /*constrained=*/true);
}

RaySolution decompose_ray_udm(const DecompositionProblem& problem, const SpectrumPair& spectra,
                              const LmOptions& options) {
  if (!(problem.weight.high >= 0.0) || !(problem.weight.low >= 0.0)) {
    throw DomainError("udm: weights must be nonnegative");
  }
  if (!(problem.rho_c >= 0.0) || !(problem.rho_p >= 0.0)) throw DomainError("udm: penalties must be >= 0");
  if (!std::isfinite(problem.anchor.compton) || !std::isfinite(problem.anchor.photo)) {
    throw DomainError("udm: anchors must be finite");
  }
  return solve(problem, problem.anchor, spectra, options, /*constrained=*/false);
}

void DecompositionReport::write(std::ostream& out) const {
  for (const auto& f : failures) out << f.ray << '\t' << to_string(f.status) << '\n';
}

DecompositionResult decompose_all(const DecompositionInputs& in, const SpectrumPair& spectra,
                                  DecompositionMode mode, const LmOptions& options, OpCounters* counters) {
  if (!in.measured || !in.weights) throw DimensionError("decompose_all: measurements and weights required");
  const Sinogram& mh = in.measured->high;
  const Sinogram& ml = in.measured->low;
  const bool penalized = mode == DecompositionMode::kPenalized;
  if (!mh.same_shape(ml) || !mh.same_shape(in.weights->high) || !mh.same_shape(in.weights->low)) {
    throw DimensionError("decompose_all: measurement/weight shapes differ");
  }
  if (penalized) {
    if (!in.anchor_compton || !in.anchor_photo || !mh.same_shape(*in.anchor_compton) ||
        !mh.same_shape(*in.anchor_photo)) {
      throw DimensionError("decompose_all: penalised mode needs anchors matching the sinogram");
    }
    if (!(in.rho_c >= 0.0) || !(in.rho_p >= 0.0)) throw DomainError("decompose_all: penalties must be >= 0");
  }

  const std::size_t rays = mh.size();
  const auto& wh = in.weights->high;
  const auto& wl = in.weights->low;
  for (std::size_t i = 0; i < rays; ++i) {
    if (!std::isfinite(mh[i]) || !std::isfinite(ml[i])) throw DomainError("decompose_all: non-finite measurement");
    if (!(wh[i] >= 0.0) || !(wl[i] >= 0.0)) throw DomainError("decompose_all: weights must be nonnegative");
    if (penalized && (!std::isfinite((*in.anchor_compton)[i]) || !std::isfinite((*in.anchor_photo)[i]))) {
      throw DomainError("decompose_all: non-finite anchor");
    }
  }
  DecompositionResult out{Sinogram(mh.angles(), mh.detectors()), Sinogram(mh.angles(), mh.detectors()), {}};
  std::vector<RayStatus> status(rays);
  std::vector<int> evals(rays), iters(rays);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rays); ++r) {
    const std::size_t i = static_cast<std::size_t>(r);
    DecompositionProblem p;
    p.measured = {mh[i], ml[i]};
    p.weight = {wh[i], wl[i]};
    RaySolution s;
    if (penalized) {
      p.rho_c = in.rho_c;
      p.rho_p = in.rho_p;
      p.anchor = {(*in.anchor_compton)[i], (*in.anchor_photo)[i]};
      s = solve(p, p.anchor, spectra, options, false);
    } else {
      s = solve(p, cdm_start(p.measured, spectra), spectra, options, true);
    }
    out.compton[i] = s.a.compton;
    out.photo[i] = s.a.photo;
    status[i] = s.status;
    evals[i] = s.evaluations;
    iters[i] = s.iterations;
  }

  for (std::size_t i = 0; i < rays; ++i) {
    out.report.evaluations += static_cast<std::uint64_t>(evals[i]);
    out.report.iterations += static_cast<std::uint64_t>(iters[i]);
    if (status[i] != RayStatus::kConverged) out.report.failures.push_back({i, status[i]});
  }
  if (counters && rays > 0) counters->add_forward_model((out.report.evaluations + rays - 1) / rays);
  return out;
}

}  // namespace dect
