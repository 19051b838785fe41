#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "dect/difference.hpp"
#include "dect/error.hpp"
#include "dect/linsolve.hpp"
#include "dect/vector_ops.hpp"
#include "test_support.hpp"

using namespace dect;

namespace {

Eigen::MatrixXd dense_difference(int side) {
  const int n = side * side;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2 * n, n);
  auto idx = [side](int r, int c) { return r * side + c; };
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      if (c + 1 < side) {
        d(idx(r, c), idx(r, c + 1)) = 1.0;
        d(idx(r, c), idx(r, c)) = -1.0;
      }
      if (r + 1 < side) {
        d(n + idx(r, c), idx(r + 1, c)) = 1.0;
        d(n + idx(r, c), idx(r, c)) = -1.0;
      }
    }
  }
  return d;
}

Eigen::MatrixXd dense_projector(const Projector& p) {
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

Eigen::VectorXd as_eigen(std::span<const double> v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

}  // namespace

TEST(Difference, MatchesDenseOperatorAndAdjoint) {
  const int side = 6;
  const Eigen::MatrixXd d = dense_difference(side);
  const Image x = test::random_image(side, 1);
  EXPECT_LE((as_eigen(difference(x)) - d * as_eigen(x.values())).cwiseAbs().maxCoeff(), 1e-14);
  const auto y = test::random_vector(2 * side * side, 2);
  const Image dty = difference_adjoint(y, side, side);
  EXPECT_LE((as_eigen(dty.values()) - d.transpose() * as_eigen(y)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(StackedSystem, NormalOperatorMatchesDenseAssembly) {
  const auto g = ScanGeometry::square(8, 9, 13);
  Projector p(g);
  const Eigen::MatrixXd r = dense_projector(p);
  const Eigen::MatrixXd d = dense_difference(8);
  const Eigen::MatrixXd ata = r.transpose() * r + d.transpose() * d + Eigen::MatrixXd::Identity(64, 64);
  const StackedSystem sys = StackedSystem::full(p);
  const Image x = test::random_image(8, 3);
  const Image out = sys.normal_apply(x);
  EXPECT_LE((as_eigen(out.values()) - ata * as_eigen(x.values())).cwiseAbs().maxCoeff(), 1e-12);

  const Sinogram a = test::random_sinogram(g, 4);
  const auto y = test::random_vector(128, 5);
  const Image z = test::random_image(8, 6);
  const Image at = sys.adjoint_apply(a.values(), y, z.values());
  const Eigen::VectorXd ref = r.transpose() * as_eigen(a.values()) + d.transpose() * as_eigen(y) + as_eigen(z.values());
  EXPECT_LE((as_eigen(at.values()) - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(StackedSystem, NormalPartsExposeProjections) {
  const auto g = ScanGeometry::square(8, 9, 13);
  Projector p(g);
  const StackedSystem sys = StackedSystem::full(p);
  const Image x = test::random_image(8, 7);
  std::vector<double> rx(g.ray_count()), rtrx(g.pixel_count()), out(g.pixel_count());
  NormalParts parts{rx, rtrx};
  sys.normal_apply(x.values(), out, &parts);
  EXPECT_TRUE(std::equal(rx.begin(), rx.end(), p.forward(x).values().begin()));
  const Image back = p.back(p.forward(x));
  EXPECT_TRUE(std::equal(rtrx.begin(), rtrx.end(), back.values().begin()));
}

TEST(ConjugateGradient, SolvesDenseSpdSystem) {
  const int n = 30;
  const auto v = test::random_vector(n * n, 8);
  const Eigen::MatrixXd b = Eigen::Map<const Eigen::MatrixXd>(v.data(), n, n);
  const Eigen::MatrixXd a = b.transpose() * b + 0.5 * Eigen::MatrixXd::Identity(n, n);
  const auto rhs = test::random_vector(n, 9);
  LinearMap op = [&](std::span<const double> in, std::span<double> out) {
    Eigen::Map<Eigen::VectorXd>(out.data(), n) = a * as_eigen(in);
  };
  CgOptions opt;
  opt.max_iters = 200;
  opt.tol = 1e-13;
  const auto res = conjugate_gradient(op, {}, rhs, std::vector<double>(n, 0.0), opt);
  const Eigen::VectorXd ref = a.ldlt().solve(as_eigen(rhs));
  EXPECT_TRUE(res.converged);
  EXPECT_LE((as_eigen(res.x) - ref).norm(), 1e-9 * ref.norm());
  EXPECT_EQ(res.residual_history.size(), static_cast<std::size_t>(res.iterations) + 1);
}

TEST(ConjugateGradient, ZeroToleranceRunsExactIterationCount) {
  const int n = 10;
  LinearMap op = [](std::span<const double> in, std::span<double> out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = (2.0 + i) * in[i];
  };
  const auto rhs = test::random_vector(n, 10);
  CgOptions opt;
  opt.max_iters = 4;
  opt.tol = 0.0;
  int steps = 0;
  opt.on_step = [&](double) { ++steps; };
  const auto res = conjugate_gradient(op, {}, rhs, std::vector<double>(n, 0.0), opt);
  EXPECT_EQ(res.iterations, 4);
  EXPECT_EQ(steps, 4);
}

TEST(ConjugateGradient, ZeroIterationsReturnsWarmStart) {
  LinearMap op = [](std::span<const double> in, std::span<double> out) { std::copy(in.begin(), in.end(), out.begin()); };
  const auto x0 = test::random_vector(5, 11);
  CgOptions opt;
  opt.max_iters = 0;
  const auto res = conjugate_gradient(op, {}, test::random_vector(5, 12), x0, opt);
  EXPECT_EQ(res.x, x0);
}

TEST(ConjugateGradient, ThrowsOnIndefiniteOperator) {
  LinearMap op = [](std::span<const double> in, std::span<double> out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = -in[i];
  };
  CgOptions opt;
  opt.max_iters = 3;
  EXPECT_THROW(conjugate_gradient(op, {}, std::vector<double>{1.0, 2.0}, std::vector<double>{0.0, 0.0}, opt),
               NumericalBreakdown);
}

TEST(Preconditioner, IdentitySystemHasUnitGains) {
  const StackedSystem sys = StackedSystem::identity_only(8);
  const Preconditioner prec = Preconditioner::build(sys);
  for (double g : prec.gains()) EXPECT_NEAR(g, 1.0, 1e-12);
  const auto v = test::random_vector(64, 13);
  std::vector<double> out(64);
  prec.apply(v, out);
  for (int i = 0; i < 64; ++i) EXPECT_NEAR(out[i], v[i], 1e-12);
}

TEST(Preconditioner, InvertsCirculantOperatorExactly) {
  // On a circulant system the PSF filter is the exact inverse.
  const int side = 8;
  const std::vector<double> kernel = {8.0, -1.0, -0.5};  // centre, 4-neighbours, diagonals
  auto circ = [&](std::span<const double> in, std::span<double> out) {
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        double acc = kernel[0] * in[r * side + c];
        for (auto [dr, dc] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
          acc += kernel[1] * in[((r + dr + side) % side) * side + (c + dc + side) % side];
        }
        for (auto [dr, dc] : {std::pair{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}) {
          acc += kernel[2] * in[((r + dr + side) % side) * side + (c + dc + side) % side];
        }
        out[r * side + c] = acc;
      }
    }
  };
  Image psf(side, side);
  std::vector<double> one(side * side, 0.0);
  one[(side / 2) * side + side / 2] = 1.0;
  circ(one, psf.values());
  // Build gains through the public constructor from the DFT of the shifted PSF.
  std::vector<double> gains(side * side);
  for (int u = 0; u < side; ++u) {
    for (int v = 0; v < side; ++v) {
      const double w = 2.0 * M_PI / side;
      gains[u * side + v] = 1.0 / (kernel[0] + 2.0 * kernel[1] * (std::cos(w * u) + std::cos(w * v)) +
                                   4.0 * kernel[2] * std::cos(w * u) * std::cos(w * v));
    }
  }
  const Preconditioner prec(side, gains, psf);
  const auto x = test::random_vector(side * side, 14);
  std::vector<double> ax(side * side), back(side * side);
  circ(x, ax);
  prec.apply(ax, back);
  for (int i = 0; i < side * side; ++i) EXPECT_NEAR(back[i], x[i], 1e-12);
}

TEST(Preconditioner, BuildUsesCentredImpulseResponse) {
  const auto g = ScanGeometry::square(16, 20, 25);
  Projector p(g);
  const StackedSystem sys = StackedSystem::full(p);
  const Preconditioner prec = Preconditioner::build(sys);
  Image one(16, 16);
  one(8, 8) = 1.0;
  EXPECT_TRUE(prec.psf() == sys.normal_apply(one));
  const auto mag = prec.psf_spectrum_magnitude();
  const double peak = *std::max_element(mag.begin(), mag.end());
  for (std::size_t i = 0; i < mag.size(); ++i) {
    EXPECT_NEAR(prec.gains()[i], 1.0 / std::max(mag[i], Preconditioner::kClamp * peak), 1e-12 / mag[i]);
  }
}

TEST(Preconditioner, RejectsZeroPsf) {
  const StackedSystem sys(nullptr, 8, false, false);
  EXPECT_THROW(Preconditioner::build(sys), DomainError);
}

TEST(PcgSolve, RecoversConstructedSolution) {
  const auto g = ScanGeometry::square(32, 45, 47);
  Projector p(g);
  const StackedSystem sys = StackedSystem::full(p);
  const Image xstar = test::random_image(32, 15, 0.0, 1.0);
  const Image rhs = sys.normal_apply(xstar);
  const Preconditioner prec = Preconditioner::build(sys);
  const auto pcg = pcg_solve(sys, prec, rhs, Image(32, 32), 2000, 1e-13);
  const auto cg = cg_solve(sys, rhs, Image(32, 32), 2000, 1e-13);
  EXPECT_TRUE(pcg.converged);
  EXPECT_TRUE(cg.converged);
  EXPECT_LE(vec::distance(pcg.x, xstar.values()), 1e-6 * vec::norm2(xstar.values()));
  EXPECT_LE(vec::distance(pcg.x, cg.x), 1e-6 * vec::norm2(xstar.values()));
  EXPECT_THROW(cg_solve(sys, rhs, Image(32, 32), 10, 0.0), DomainError);
}
