#pragma once

// Subcommands of the `dect` tool. Each returns a process exit code.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "dect/admm.hpp"

namespace dect::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,       // I/O, validation or numerical error
  kUsage = 2,         // bad command line
  kTooManyFailedRays = 3,
};

struct SimulateConfig {
  std::string geometry = "desk";
  std::string phantom = "sim18";  // builtin name or path to a phantom file
  double photons = 1e5;
  std::uint64_t seed = 0;
  std::string spectra = "poly";  // poly | mono
  bool noiseless = false;
  int threads = 0;
  std::filesystem::path out = "sim";
};

struct ReconConfig {
  std::filesystem::path in = "sim";
  std::filesystem::path out = "recon";
  std::string method = "admm-pcg";
  int cg_iters = 5;
  int lm_iters = 1;
  int udm_iters = 50;
  double lambda = 1e-5;
  double rho0 = 1e-3;
  int max_iters = 100;
  double tol = 1e-4;
  double pe_init_scale = 1e3;
  int threads = 0;
  std::optional<std::filesystem::path> roi;
  // Negative: 1% of the rays.
  long long max_failed_rays = -1;
};

struct MetricsConfig {
  std::filesystem::path in;         // directory with x_c/x_p or phantom_c/phantom_p
  std::filesystem::path reference;  // same
  std::optional<std::filesystem::path> roi;
};

struct PrecondConfig {
  std::string geometry = "desk";
  int threads = 0;
  std::filesystem::path out = "precond";
};

// Spectra used by `simulate`: the built-in 130/95 kVp pair, or single bins
// at 80 and 50 keV.
SpectrumPair spectra_for(const std::string& kind);

int cmd_simulate(const SimulateConfig& config, std::ostream& log);
int cmd_recon(const ReconConfig& config, std::ostream& log);
int cmd_metrics(const MetricsConfig& config, std::ostream& out);
int cmd_precond_dump(const PrecondConfig& config, std::ostream& log);

// Parses argv and dispatches; errors go to `err`.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace dect::cli
