#include <benchmark/benchmark.h>

#include <random>

#include "dect/decompose.hpp"
#include "dect/linsolve.hpp"
#include "dect/phantom.hpp"
#include "dect/projector.hpp"

using namespace dect;

namespace {

Image random_image(int side) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  Image x(side, side);
  for (double& v : x.values()) v = d(gen);
  return x;
}

void BM_Forward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  Projector p(ScanGeometry::square(side, side + side / 2 - 12, side + side / 2 - 7));
  const Image x = random_image(side);
  for (auto _ : state) benchmark::DoNotOptimize(p.forward(x));
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Back(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  Projector p(ScanGeometry::square(side, side + side / 2 - 12, side + side / 2 - 7));
  const Sinogram s = p.forward(random_image(side));
  for (auto _ : state) benchmark::DoNotOptimize(p.back(s));
}
BENCHMARK(BM_Back)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_DecomposeAll(benchmark::State& state) {
  const ScanGeometry g = ScanGeometry::desk();
  const Projector p(g);
  const SpectrumPair spectra{Spectrum::builtin(130), Spectrum::builtin(95)};
  const Measurements m = simulate(rasterize(builtin_phantom("sim18"), g), p, spectra, SimulationOptions{});
  DecompositionInputs in;
  in.measured = &m.log;
  in.weights = &m.weights;
  LmOptions opt;
  for (auto _ : state) {
    benchmark::DoNotOptimize(decompose_all(in, spectra, DecompositionMode::kConstrained, opt));
  }
}
BENCHMARK(BM_DecomposeAll)->Unit(benchmark::kMillisecond);

void BM_Pcg(benchmark::State& state) {
  const Projector p(ScanGeometry::desk());
  const StackedSystem sys = StackedSystem::full(p);
  const Preconditioner prec = Preconditioner::build(sys);
  const Image rhs = sys.normal_apply(random_image(128));
  for (auto _ : state) benchmark::DoNotOptimize(pcg_solve(sys, prec, rhs, Image(128, 128), 5, 1e-12));
}
BENCHMARK(BM_Pcg)->Unit(benchmark::kMillisecond);

}  // namespace
