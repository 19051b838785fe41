#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>

#include "dect/error.hpp"
#include "dect/parallel.hpp"
#include "dect/phantom.hpp"
#include "dect/projector.hpp"
#include "dect/vector_ops.hpp"
#include "test_support.hpp"

using namespace dect;

namespace {

ScanGeometry small(int side, int angles, int detectors) { return ScanGeometry::square(side, angles, detectors); }

Eigen::MatrixXd dense_forward(const Projector& p) {
  const auto& g = p.geometry();
  Eigen::MatrixXd m(g.ray_count(), g.pixel_count());
  std::vector<double> e(g.pixel_count()), out(g.ray_count());
  for (std::size_t j = 0; j < e.size(); ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    p.forward(e, out);
    for (std::size_t i = 0; i < out.size(); ++i) m(i, j) = out[i];
  }
  return m;
}

Eigen::MatrixXd dense_back(const Projector& p) {
  const auto& g = p.geometry();
  Eigen::MatrixXd m(g.pixel_count(), g.ray_count());
  std::vector<double> e(g.ray_count()), out(g.pixel_count());
  for (std::size_t i = 0; i < e.size(); ++i) {
    std::fill(e.begin(), e.end(), 0.0);
    e[i] = 1.0;
    p.back(e, out);
    for (std::size_t j = 0; j < out.size(); ++j) m(j, i) = out[j];
  }
  return m;
}

}  // namespace

TEST(Projector, BackIsExactTransposeOfForward) {
  for (auto g : {small(8, 7, 13), small(9, 12, 11), small(6, 4, 9)}) {
    Projector p(g);
    const Eigen::MatrixXd r = dense_forward(p);
    const Eigen::MatrixXd rt = dense_back(p);
    EXPECT_LE((r.transpose() - rt).cwiseAbs().maxCoeff(), 1e-13 * r.cwiseAbs().maxCoeff());
  }
}

TEST(Projector, InnerProductIdentityOnRandomPairs) {
  for (auto g : {small(32, 30, 47), small(33, 17, 50), small(16, 64, 25)}) {
    Projector p(g);
    for (int k = 0; k < 5; ++k) {
      const Image x = test::random_image(g.image_side, 100 + k);
      const Sinogram y = test::random_sinogram(g, 200 + k);
      const double lhs = vec::dot(p.forward(x).values(), y.values());
      const double rhs = vec::dot(x.values(), p.back(y).values());
      EXPECT_NEAR(lhs, rhs, 1e-10 * (std::abs(lhs) + std::abs(rhs)));
    }
  }
}

TEST(Projector, DiscProjectionMatchesChordLength) {
  // Uniform disc of radius 10 cm, mu = 1: p(s) = 2 sqrt(r^2 - s^2).
  const auto g = ScanGeometry::square(256, 8, 363);
  PhantomSpec spec;
  spec.shapes = {{0.0, 0.0, 10.0, "water"}};
  const BasisImage img = rasterize(spec, g);
  Image unit = img.compton;
  for (auto& v : unit.values()) v = v > 0 ? 1.0 : 0.0;
  Projector p(g);
  const Sinogram s = p.forward(unit);
  const double centre = 0.5 * (g.detector_count - 1);
  for (int a = 0; a < 8; ++a) {
    for (int d : {181, 200, 220, 150}) {
      const double off = (d - centre) * g.detector_pitch;
      const double chord = 2.0 * std::sqrt(100.0 - off * off);
      EXPECT_NEAR(s(a, d), chord, 0.02 * chord) << "angle " << a << " det " << d;
    }
  }
}

TEST(Projector, ProjectionAtZeroAngleSumsColumns) {
  // At theta = 0 the rays run along image columns through pixel centres.
  const auto g = ScanGeometry::square(8, 1, 8);
  Projector p(g);
  const Image x = test::random_image(8, 3);
  const Sinogram s = p.forward(x);
  for (int d = 0; d < 8; ++d) {
    double col = 0.0;
    for (int r = 0; r < 8; ++r) col += x(r, d);
    EXPECT_NEAR(s(0, d), col * g.pixel_pitch, 1e-12);
  }
}

TEST(Projector, ResultIndependentOfThreadCount) {
  const auto g = small(40, 33, 59);
  Projector p(g);
  const Image x = test::random_image(40, 5);
  const Sinogram y = test::random_sinogram(g, 6);
  set_thread_count(1);
  const Sinogram f1 = p.forward(x);
  const Image b1 = p.back(y);
  set_thread_count(4);
  const Sinogram f4 = p.forward(x);
  const Image b4 = p.back(y);
  EXPECT_TRUE(f1 == f4);
  EXPECT_TRUE(b1 == b4);
}

TEST(Projector, CountsOperations) {
  auto counters = std::make_shared<OpCounters>();
  Projector p(small(8, 4, 12), counters);
  p.forward(Image(8, 8));
  p.forward(Image(8, 8));
  p.back(Sinogram(4, 12));
  EXPECT_EQ(counters->snapshot(), (OpCounts{2, 1, 0}));
}

TEST(Projector, RejectsMismatchedShapes) {
  Projector p(small(8, 4, 12));
  EXPECT_THROW(p.forward(Image(9, 9)), DimensionError);
  EXPECT_THROW(p.back(Sinogram(4, 11)), DimensionError);
  EXPECT_THROW(ScanGeometry::parse("8x9:4:12"), ConfigError);
  EXPECT_THROW(ScanGeometry::parse("nonsense"), ConfigError);
}

TEST(Geometry, BuiltinShapes) {
  const auto d = ScanGeometry::desk();
  EXPECT_EQ(d.image_side, 128);
  EXPECT_EQ(d.angle_count(), 180u);
  EXPECT_EQ(d.detector_count, 185);
  const auto p = ScanGeometry::paper();
  EXPECT_EQ(p.image_side, 512);
  EXPECT_EQ(p.angle_count(), 720u);
  EXPECT_EQ(p.detector_count, 725);
  EXPECT_TRUE(d.covers_diagonal());
  EXPECT_TRUE(p.covers_diagonal());
  EXPECT_EQ(ScanGeometry::parse("64x64:90:93"), ScanGeometry::square(64, 90, 93));
}

namespace {

// Direct O(L^2) DFT reference for the ramp filter with edge-replicated
// padding to the next power of two >= 2D, centred.
std::vector<double> ramp_reference(std::span<const double> row) {
  const int d = static_cast<int>(row.size());
  int l = 1;
  while (l < 2 * d) l *= 2;
  const int off = (l - d) / 2;
  std::vector<double> padded(l);
  for (int i = 0; i < l; ++i) padded[i] = row[std::clamp(i - off, 0, d - 1)];
  std::vector<std::complex<double>> spec(l);
  for (int k = 0; k < l; ++k) {
    std::complex<double> acc = 0.0;
    for (int n = 0; n < l; ++n) acc += padded[n] * std::polar(1.0, -2.0 * std::numbers::pi * k * n / l);
    const int kk = k <= l / 2 ? k : l - k;
    spec[k] = acc * (static_cast<double>(kk) / l);
  }
  std::vector<double> out(d);
  for (int i = 0; i < d; ++i) {
    std::complex<double> acc = 0.0;
    for (int k = 0; k < l; ++k) acc += spec[k] * std::polar(1.0, 2.0 * std::numbers::pi * k * (i + off) / l);
    out[i] = acc.real() / l;
  }
  return out;
}

}  // namespace

TEST(RampFilter, MatchesDirectDft) {
  const auto g = small(8, 3, 13);
  const Sinogram s = test::random_sinogram(g, 11);
  const Sinogram f = ramp_filter(s);
  for (int a = 0; a < 3; ++a) {
    const auto ref = ramp_reference(s.row(a));
    for (int d = 0; d < 13; ++d) EXPECT_NEAR(f(a, d), ref[d], 1e-12);
  }
}

TEST(RampFilter, ConstantRowFiltersToZero) {
  Sinogram s(2, 16, 3.5);
  const Sinogram f = ramp_filter(s);
  for (double v : f.values()) EXPECT_NEAR(v, 0.0, 1e-12);
  EXPECT_THROW(ramp_filter(Sinogram(2, 1)), DimensionError);
}

TEST(Fbp, RecoversUniformDiscInterior) {
  const auto g = ScanGeometry::square(128, 180, 185);
  PhantomSpec spec;
  spec.shapes = {{0.0, 0.0, 10.0, "water"}};
  const BasisImage img = rasterize(spec, g);
  Projector p(g);
  const Image rec = fbp(p.forward(img.compton), p);
  const double mu = MaterialTable::builtin().at("water").compton;
  double mean = 0.0;
  int n = 0;
  for (int r = 54; r < 74; ++r) {
    for (int c = 54; c < 74; ++c) {
      mean += rec(r, c);
      ++n;
    }
  }
  mean /= n;
  EXPECT_NEAR(mean, mu, 0.02 * mu);
  EXPECT_NEAR(rec(2, 2), 0.0, 0.05 * mu);
}
