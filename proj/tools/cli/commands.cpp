#include "cli/commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "dect/error.hpp"
#include "dect/io.hpp"
#include "dect/linsolve.hpp"
#include "dect/metrics.hpp"
#include "dect/parallel.hpp"
#include "dect/phantom.hpp"
#include "dect/rng.hpp"

namespace dect::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void apply_threads(int requested) { set_thread_count(resolve_thread_count(requested)); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

PhantomSpec phantom_for(const std::string& name) {
  if (name == "sim18" || name == "clutter") return builtin_phantom(name);
  return PhantomSpec::load(name);
}

// Directory holding a basis pair as x_c/x_p (reconstruction) or
// phantom_c/phantom_p (simulation ground truth).
BasisImage read_pair(const fs::path& dir) {
  for (const auto& [c, p] : {std::pair{"x_c.raw", "x_p.raw"}, std::pair{"phantom_c.raw", "phantom_p.raw"}}) {
    if (fs::exists(dir / c) && fs::exists(dir / p)) return {io::read_image(dir / c), io::read_image(dir / p)};
  }
  throw IoError(dir.string() + ": no x_c/x_p or phantom_c/phantom_p images");
}

std::string format_db(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

json ops_json(const OpCounts& c) {
  return {{"forward", c.forward}, {"backward", c.backward}, {"forward_model", c.forward_model}};
}

}  // namespace

SpectrumPair spectra_for(const std::string& kind) {
  if (kind == "poly") return {Spectrum::builtin(130), Spectrum::builtin(95)};
  if (kind == "mono") return {Spectrum::monochromatic(80.0), Spectrum::monochromatic(50.0)};
  throw ConfigError("spectra must be poly or mono, got '" + kind + "'");
}

int cmd_simulate(const SimulateConfig& cfg, std::ostream& log) {
  apply_threads(cfg.threads);
  const ScanGeometry geom = ScanGeometry::parse(cfg.geometry);
  const PhantomSpec spec = phantom_for(cfg.phantom);
  spec.validate(geom);
  const SpectrumPair spectra = spectra_for(cfg.spectra);
  if (!(cfg.photons > 0.0)) throw ConfigError("photons must be positive");

  const Projector projector(geom);
  const BasisImage truth = rasterize(spec, geom);
  SimulationOptions opt;
  opt.photons_per_ray = cfg.photons;
  opt.seed = cfg.seed;
  opt.noisy = !cfg.noiseless;
  const Measurements m = simulate(truth, projector, spectra, opt);

  fs::create_directories(cfg.out);
  const double h = geom.pixel_pitch, dp = geom.detector_pitch;
  io::write_angles(cfg.out / "angles.txt", geom.angles);
  io::write_image(cfg.out / "phantom_c.raw", truth.compton, h);
  io::write_image(cfg.out / "phantom_p.raw", truth.photo, h);
  io::write_pgm16(cfg.out / "phantom_c.pgm", truth.compton);
  io::write_pgm16(cfg.out / "phantom_p.pgm", truth.photo);
  const std::pair<const char*, const Sinogram*> sinos[] = {
      {"m_high.raw", &m.log.high},         {"m_low.raw", &m.log.low},
      {"clean_high.raw", &m.clean.high},   {"clean_low.raw", &m.clean.low},
      {"weights_high.raw", &m.weights.high}, {"weights_low.raw", &m.weights.low},
  };
  for (const auto& [name, s] : sinos) io::write_sinogram(cfg.out / name, *s, dp, "angles.txt");
  spectra.high.save(cfg.out / "spectrum_high.txt");
  spectra.low.save(cfg.out / "spectrum_low.txt");
  write_text(cfg.out / "phantom.txt", spec.to_text());
  std::ostringstream starved;
  for (std::size_t r : m.starved) starved << r << '\n';
  write_text(cfg.out / "starved.txt", starved.str());

  json manifest = {
      {"kind", "dect-simulation"},
      {"geometry", cfg.geometry},
      {"image_side", geom.image_side},
      {"pixel_pitch_cm", h},
      {"angles", geom.angle_count()},
      {"detectors", geom.detector_count},
      {"detector_pitch_cm", dp},
      {"phantom", spec.name},
      {"photons", cfg.photons},
      {"seed", cfg.seed},
      {"rng_version", kRngVersion},
      {"spectra", cfg.spectra},
      {"noiseless", cfg.noiseless},
      {"starved_rays", m.starved.size()},
  };
  write_text(cfg.out / "manifest.json", manifest.dump(2) + "\n");
  log << "simulated " << spec.name << " on " << geom.image_side << "x" << geom.image_side << ", "
      << geom.angle_count() << " angles x " << geom.detector_count << " detectors; " << m.starved.size()
      << " starved rays -> " << cfg.out.string() << "\n";
  return kOk;
}

int cmd_recon(const ReconConfig& cfg, std::ostream& log) {
  apply_threads(cfg.threads);
  const json manifest = read_json(cfg.in / "manifest.json");
  const ScanGeometry geom = ScanGeometry::parse(manifest.at("geometry").get<std::string>());
  const double photons = manifest.at("photons").get<double>();

  AdmmConfig ac;
  ac.method = parse_method(cfg.method);
  ac.cg_iters = cfg.cg_iters;
  ac.lm_iters = cfg.lm_iters;
  ac.udm_iters = cfg.udm_iters;
  ac.lambda_c = ac.lambda_p = cfg.lambda;
  ac.rho0 = cfg.rho0;
  ac.max_iters = cfg.max_iters;
  ac.tol = cfg.tol;
  ac.pe_init_scale = cfg.pe_init_scale;
  ac.validate();

  const SpectrumPair spectra{Spectrum::load(cfg.in / "spectrum_high.txt"), Spectrum::load(cfg.in / "spectrum_low.txt")};
  const SinogramPair measured{io::read_sinogram(cfg.in / "m_high.raw"), io::read_sinogram(cfg.in / "m_low.raw")};
  const SinogramPair weights{io::read_sinogram(cfg.in / "weights_high.raw"),
                             io::read_sinogram(cfg.in / "weights_low.raw")};
  std::optional<BasisImage> reference;
  if (fs::exists(cfg.in / "phantom_c.raw")) reference = read_pair(cfg.in);
  std::optional<Image> roi;
  if (cfg.roi) roi = io::read_image(*cfg.roi);

  const Projector projector(geom);
  AdmmInputs inputs;
  inputs.measured = &measured;
  inputs.weights = &weights;
  inputs.spectra = &spectra;
  inputs.projector = &projector;
  inputs.blank_counts = photons;
  inputs.reference = reference ? &*reference : nullptr;
  inputs.roi = roi ? &*roi : nullptr;

  fs::create_directories(cfg.out);
  std::ofstream telemetry(cfg.out / "telemetry.csv");
  if (!telemetry) throw IoError("cannot write telemetry");
  write_telemetry_header(telemetry);
  const AdmmResult result = run(ac, inputs, [&](const IterationRecord& r) {
    write_telemetry_row(telemetry, r);
    telemetry.flush();
  });

  io::write_image(cfg.out / "x_c.raw", result.images.compton, geom.pixel_pitch);
  io::write_image(cfg.out / "x_p.raw", result.images.photo, geom.pixel_pitch);
  io::write_pgm16(cfg.out / "x_c.pgm", result.images.compton);
  io::write_pgm16(cfg.out / "x_p.pgm", result.images.photo);

  const DecompositionReport& report = ac.method == Method::kCdmFbp || result.records.empty()
                                          ? result.init_report
                                          : result.last_report;
  {
    std::ofstream failed(cfg.out / "failed_rays.tsv");
    report.write(failed);
  }

  const OpCounts total = result.records.empty() ? result.init_ops : result.records.back().ops;
  json summary = {
      {"kind", "dect-reconstruction"},
      {"method", std::string(to_string(ac.method))},
      {"iterations", result.records.size()},
      {"converged", result.converged},
      {"stop_reason", result.stop_reason},
      {"cg_iters", ac.cg_iters},
      {"lm_iters", ac.lm_iters},
      {"lambda", ac.lambda_c},
      {"rho0", ac.rho0},
      {"pe_init_scale", ac.pe_init_scale},
      {"pe_unit", ac.pe_unit},
      {"init_ops", ops_json(result.init_ops)},
      {"total_ops", ops_json(total)},
      {"failed_rays", report.failures.size()},
  };
  if (reference) {
    summary["e_c_db"] = format_db(error_db(result.images.compton, reference->compton, inputs.roi));
    summary["e_p_db"] = format_db(error_db(result.images.photo, reference->photo, inputs.roi));
  }
  write_text(cfg.out / "recon.json", summary.dump(2) + "\n");

  log << to_string(ac.method) << ": " << result.records.size() << " iterations (" << result.stop_reason << ")";
  if (reference) log << ", e_c " << summary["e_c_db"].get<std::string>() << " dB, e_p " << summary["e_p_db"].get<std::string>() << " dB";
  log << ", " << report.failures.size() << " unconverged rays\n";

  const long long limit = cfg.max_failed_rays >= 0 ? cfg.max_failed_rays
                                                   : static_cast<long long>(geom.ray_count() / 100);
  if (static_cast<long long>(report.failures.size()) > limit) {
    log << "error: " << report.failures.size() << " unconverged rays exceed the limit of " << limit << "\n";
    return kTooManyFailedRays;
  }
  return kOk;
}

int cmd_metrics(const MetricsConfig& cfg, std::ostream& out) {
  const BasisImage x = read_pair(cfg.in);
  const BasisImage ref = read_pair(cfg.reference);
  if (!x.compton.same_shape(ref.compton) || !x.photo.same_shape(ref.photo)) {
    throw DimensionError("metrics: image shapes differ");
  }
  out << "e_c_db " << format_db(error_db(x.compton, ref.compton)) << "\n";
  out << "e_p_db " << format_db(error_db(x.photo, ref.photo)) << "\n";
  if (cfg.roi) {
    const Image roi = io::read_image(*cfg.roi);
    if (!roi.same_shape(x.compton)) throw DimensionError("metrics: ROI shape differs");
    out << "roi_e_c_db " << format_db(error_db(x.compton, ref.compton, &roi)) << "\n";
    out << "roi_e_p_db " << format_db(error_db(x.photo, ref.photo, &roi)) << "\n";
  }
  return kOk;
}

int cmd_precond_dump(const PrecondConfig& cfg, std::ostream& log) {
  apply_threads(cfg.threads);
  const ScanGeometry geom = ScanGeometry::parse(cfg.geometry);
  const Projector projector(geom);
  const Preconditioner prec = Preconditioner::build(StackedSystem::full(projector));
  fs::create_directories(cfg.out);
  const Image gains = prec.gains_image();
  const auto mag = prec.psf_spectrum_magnitude();
  Image spectrum(geom.image_side, geom.image_side);
  std::copy(mag.begin(), mag.end(), spectrum.values().begin());
  const std::pair<const char*, const Image*> images[] = {
      {"psf", &prec.psf()}, {"gains", &gains}, {"psf_spectrum", &spectrum}};
  for (const auto& [name, img] : images) {
    io::write_image(cfg.out / (std::string(name) + ".raw"), *img, geom.pixel_pitch);
    io::write_pgm16(cfg.out / (std::string(name) + ".pgm"), *img);
  }
  const auto [lo, hi] = std::minmax_element(gains.values().begin(), gains.values().end());
  log << "preconditioner " << geom.image_side << "x" << geom.image_side << ": gains in [" << *lo << ", " << *hi
      << "] -> " << cfg.out.string() << "\n";
  return kOk;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-energy CT simulation and ADMM reconstruction"};
  app.require_subcommand(1);

  SimulateConfig sim;
  auto* s = app.add_subcommand("simulate", "Rasterise a phantom and simulate dual-energy projections");
  s->add_option("--geometry", sim.geometry, "desk | paper | WxH:A:D")->capture_default_str();
  s->add_option("--phantom", sim.phantom, "sim18 | clutter | <phantom file>")->capture_default_str();
  s->add_option("--photons", sim.photons, "Photons per ray (blank scan)")->capture_default_str();
  s->add_option("--seed", sim.seed, "Noise seed")->capture_default_str();
  s->add_option("--spectra", sim.spectra, "poly | mono")->capture_default_str();
  s->add_flag("--noiseless", sim.noiseless, "Expected counts instead of Poisson draws");
  s->add_option("--threads", sim.threads, "Worker threads (default: DECT_THREADS or all cores)");
  s->add_option("--out", sim.out, "Output directory")->capture_default_str();

  ReconConfig rec;
  auto* r = app.add_subcommand("recon", "Reconstruct Compton / photoelectric images");
  r->add_option("--in", rec.in, "Simulation directory")->capture_default_str();
  r->add_option("--out", rec.out, "Output directory")->capture_default_str();
  r->add_option("--method", rec.method, "cdm-fbp | admm-lm | admm-cg | admm-pcg")->capture_default_str();
  r->add_option("--cg-iters", rec.cg_iters, "CG iterations per ADMM iteration")->capture_default_str();
  r->add_option("--lm-iters", rec.lm_iters, "LM iterations per ADMM iteration (admm-lm)")->capture_default_str();
  r->add_option("--udm-iters", rec.udm_iters, "Per-ray LM iterations in the decomposition")->capture_default_str();
  r->add_option("--lambda", rec.lambda, "TV weight")->capture_default_str();
  r->add_option("--rho0", rec.rho0, "Initial penalty")->capture_default_str();
  r->add_option("--max-iters", rec.max_iters, "ADMM iterations")->capture_default_str();
  r->add_option("--tol", rec.tol, "Relative-change stopping tolerance")->capture_default_str();
  r->add_option("--pe-init-scale", rec.pe_init_scale, "x_p start as a multiple of x_c")->capture_default_str();
  r->add_option("--roi", rec.roi, "ROI mask image for e(x)");
  r->add_option("--max-failed-rays", rec.max_failed_rays, "Unconverged-ray limit (default 1% of rays)");
  r->add_option("--threads", rec.threads, "Worker threads (default: DECT_THREADS or all cores)");

  MetricsConfig met;
  auto* m = app.add_subcommand("metrics", "Normalised l2 error in dB per basis");
  m->add_option("--in", met.in, "Directory with x_c/x_p (or phantom_c/phantom_p)")->required();
  m->add_option("--reference", met.reference, "Reference directory")->required();
  m->add_option("--roi", met.roi, "ROI mask image");

  PrecondConfig pre;
  auto* p = app.add_subcommand("precond-dump", "Write the PSF preconditioner and its spectrum");
  p->add_option("--geometry", pre.geometry, "desk | paper | WxH:A:D")->capture_default_str();
  p->add_option("--threads", pre.threads, "Worker threads");
  p->add_option("--out", pre.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (s->parsed()) return cmd_simulate(sim, out);
    if (r->parsed()) return cmd_recon(rec, out);
    if (m->parsed()) return cmd_metrics(met, out);
    if (p->parsed()) return cmd_precond_dump(pre, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace dect::cli
