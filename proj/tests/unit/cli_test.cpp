#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "cli/commands.hpp"
#include "dect/io.hpp"
#include "dect/parallel.hpp"

namespace fs = std::filesystem;
using namespace dect;

namespace {

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation dect_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dect");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("dect_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

double metric(const std::string& text, const std::string& key) {
  for (const auto& l : lines(text)) {
    if (l.rfind(key + " ", 0) == 0) return std::stod(l.substr(key.size() + 1));
  }
  return std::nan("");
}

}  // namespace

TEST(CliSimulate, WritesDeskDataset) {
  const fs::path dir = scratch("desk");
  const auto r = dect_cli({"simulate", "--geometry", "desk", "--seed", "4", "--threads", "2", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"angles.txt", "phantom_c.raw", "phantom_c.hdr", "phantom_p.pgm", "m_high.raw", "m_low.hdr",
                        "weights_high.raw", "clean_low.raw", "spectrum_high.txt", "phantom.txt", "starved.txt",
                        "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto m = read_json(dir / "manifest.json");
  EXPECT_EQ(m["image_side"], 128);
  EXPECT_EQ(m["angles"], 180);
  EXPECT_EQ(m["detectors"], 185);
  EXPECT_EQ(m["phantom"], "sim18");
  const Sinogram s = io::read_sinogram(dir / "m_high.raw");
  EXPECT_EQ(s.angles(), 180);
  EXPECT_EQ(s.detectors(), 185);
  EXPECT_EQ(io::read_angles(dir / "angles.txt").size(), 180u);
}

TEST(CliSimulate, FullScaleGeometryDimensions) {
  const auto g = ScanGeometry::parse("paper");
  EXPECT_EQ(g.image_side, 512);
  EXPECT_EQ(g.angle_count(), 720u);
  EXPECT_EQ(g.detector_count, 725);
}

TEST(CliSimulate, RerunIsByteIdentical) {
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  const std::vector<std::string> common = {"simulate", "--geometry", "32x32:30:45", "--seed", "9"};
  auto args_a = common, args_b = common;
  args_a.insert(args_a.end(), {"--threads", "1", "--out", a.string()});
  args_b.insert(args_b.end(), {"--threads", "3", "--out", b.string()});
  ASSERT_EQ(dect_cli(args_a).code, 0);
  ASSERT_EQ(dect_cli(args_b).code, 0);
  for (const auto& e : fs::directory_iterator(a)) {
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
  }
}

TEST(CliRecon, CdmFbpMonoNoiseless) {
  const fs::path sim = scratch("mono_sim"), rec = scratch("mono_rec");
  ASSERT_EQ(dect_cli({"simulate", "--geometry", "desk", "--spectra", "mono", "--noiseless", "--out", sim.string()}).code,
            0);
  const auto r = dect_cli({"recon", "--in", sim.string(), "--method", "cdm-fbp", "--out", rec.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = read_json(rec / "recon.json");
  EXPECT_EQ(j["iterations"], 0);
  EXPECT_EQ(j["stop_reason"], "initialization");
  EXPECT_LE(std::stod(j["e_c_db"].get<std::string>()), -20.0);
  EXPECT_EQ(lines(slurp(rec / "telemetry.csv")).size(), 1u);
}

TEST(CliRecon, TelemetryRowsAndOperationCounts) {
  const fs::path sim = scratch("tele_sim");
  ASSERT_EQ(dect_cli({"simulate", "--geometry", "32x32:30:45", "--out", sim.string()}).code, 0);
  for (const std::string method : {"admm-pcg", "admm-lm"}) {
    const fs::path rec = scratch("tele_" + method);
    const auto r = dect_cli({"recon", "--in", sim.string(), "--method", method, "--max-iters", "4", "--cg-iters", "3",
                             "--out", rec.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = lines(slurp(rec / "telemetry.csv"));
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[0], "iter,e_c_db,e_p_db,r_c,s_c,r_p,s_p,rho_c,rho_p,nR,nRt,nf,wall_ms");
    auto field = [](const std::string& row, int k) {
      std::istringstream in(row);
      std::string f;
      for (int i = 0; i <= k; ++i) std::getline(in, f, ',');
      return std::stod(f);
    };
    const double per_iter_fwd = field(rows[4], 9) - field(rows[3], 9);
    const double per_iter_bwd = field(rows[4], 10) - field(rows[3], 10);
    if (method == "admm-pcg") {
      EXPECT_EQ(per_iter_fwd, 6.0);
      EXPECT_EQ(per_iter_bwd, 8.0);
    } else {
      EXPECT_GE(per_iter_fwd, 8.0);
      EXPECT_GE(per_iter_bwd, 8.0);
    }
    const auto j = read_json(rec / "recon.json");
    EXPECT_EQ(j["method"], method);
    EXPECT_EQ(j["iterations"], 4);
  }
}

TEST(CliMetrics, ExactAndZeroReconstruction) {
  const fs::path sim = scratch("metrics_sim"), zero = scratch("metrics_zero");
  ASSERT_EQ(dect_cli({"simulate", "--geometry", "16x16:8:23", "--out", sim.string()}).code, 0);
  const auto same = dect_cli({"metrics", "--in", sim.string(), "--reference", sim.string()});
  ASSERT_EQ(same.code, 0) << same.err;
  EXPECT_EQ(metric(same.out, "e_c_db"), -std::numeric_limits<double>::infinity());

  fs::create_directories(zero);
  io::write_image(zero / "x_c.raw", Image(16, 16), 2.0);
  io::write_image(zero / "x_p.raw", Image(16, 16), 2.0);
  const auto z = dect_cli({"metrics", "--in", zero.string(), "--reference", sim.string()});
  ASSERT_EQ(z.code, 0) << z.err;
  EXPECT_EQ(metric(z.out, "e_c_db"), 0.0);
  EXPECT_EQ(metric(z.out, "e_p_db"), 0.0);

  Image roi(16, 16);
  roi(8, 8) = 1.0;
  io::write_image(zero / "roi.raw", roi, 2.0);
  const auto rz = dect_cli({"metrics", "--in", zero.string(), "--reference", sim.string(), "--roi",
                            (zero / "roi.raw").string()});
  ASSERT_EQ(rz.code, 0) << rz.err;
  EXPECT_EQ(metric(rz.out, "roi_e_c_db"), 0.0);
}

TEST(CliExitCodes, UsageAndFailures) {
  EXPECT_EQ(dect_cli({}).code, cli::kUsage);
  EXPECT_EQ(dect_cli({"bogus"}).code, cli::kUsage);
  EXPECT_EQ(dect_cli({"simulate", "--photons", "abc"}).code, cli::kUsage);
  EXPECT_EQ(dect_cli({"simulate", "--geometry", "12x13:4:5", "--out", scratch("bad").string()}).code, cli::kUsage);
  EXPECT_EQ(dect_cli({"simulate", "--phantom", "nope", "--out", scratch("bad").string()}).code, cli::kFailure);
  EXPECT_EQ(dect_cli({"recon", "--in", scratch("missing").string()}).code, cli::kFailure);
  EXPECT_EQ(dect_cli({"--help"}).code, cli::kOk);

  const fs::path sim = scratch("exit_sim");
  ASSERT_EQ(dect_cli({"simulate", "--geometry", "16x16:8:23", "--out", sim.string()}).code, 0);
  EXPECT_EQ(dect_cli({"recon", "--in", sim.string(), "--method", "admm-x", "--out", scratch("r").string()}).code,
            cli::kUsage);
}

TEST(CliExitCodes, TooManyFailedRays) {
  // Ten photons through iron starve most rays; the decomposition fails on them.
  const fs::path dir = scratch("starved");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "iron.txt") << "disc 0 0 14 iron\n";
  }
  const fs::path sim = dir / "sim";
  ASSERT_EQ(dect_cli({"simulate", "--geometry", "16x16:8:23", "--phantom", (dir / "iron.txt").string(), "--photons",
                      "10", "--out", sim.string()})
                .code,
            0);
  const auto r = dect_cli({"recon", "--in", sim.string(), "--method", "cdm-fbp", "--udm-iters", "1",
                           "--max-failed-rays", "0", "--out", (dir / "rec").string()});
  EXPECT_EQ(r.code, cli::kTooManyFailedRays) << r.out << r.err;
  EXPECT_FALSE(slurp(dir / "rec" / "failed_rays.tsv").empty());
}

TEST(CliThreads, EnvironmentVariableSetsDefault) {
  ::setenv("DECT_THREADS", "3", 1);
  EXPECT_EQ(resolve_thread_count(0), 3);
  EXPECT_EQ(resolve_thread_count(5), 5);
  ::setenv("DECT_THREADS", "junk", 1);
  EXPECT_GE(resolve_thread_count(0), 1);
  ::unsetenv("DECT_THREADS");
}

TEST(CliPrecond, DumpsImages) {
  const fs::path out = scratch("precond");
  const auto r = dect_cli({"precond-dump", "--geometry", "32x32:30:45", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"psf.raw", "gains.raw", "psf_spectrum.pgm"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  EXPECT_EQ(io::read_image(out / "gains.raw").rows(), 32);
}

TEST(IoRoundTrip, ValuesSurviveAsFloat32) {
  const fs::path dir = scratch("io");
  fs::create_directories(dir);
  Image img(5, 5);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = 0.1 * i - 1.0 / 3.0;
  io::write_image(dir / "img.raw", img, 0.25);
  const Image back = io::read_image(dir / "img.raw");
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_EQ(back[i], static_cast<double>(static_cast<float>(img[i])));
  Sinogram s(3, 4);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::exp(0.3 * i);
  io::write_sinogram(dir / "s.raw", s, 0.5, "angles.txt");
  const Sinogram sb = io::read_sinogram(dir / "s.raw");
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(sb[i], static_cast<double>(static_cast<float>(s[i])));
}
