#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>
#include <vector>

#include "viscest/dynamics.hpp"
#include "viscest/noise.hpp"
#include "viscest/random.hpp"
#include "viscest/stokes_basis.hpp"

using namespace viscest;

namespace {

ChannelGeometry geometry(int J) {
  ChannelGeometry g;
  g.max_wavenumber = J >= 32 ? 8 : 4;
  g.wall_order = 32;
  g.modes = J;
  return g;
}

const GalerkinModel& model(int J) {
  static const GalerkinModel m8(assemble_basis(geometry(8)));
  static const GalerkinModel m16(assemble_basis(geometry(16)));
  static const GalerkinModel m32(assemble_basis(geometry(32)));
  return J == 8 ? m8 : J == 16 ? m16 : m32;
}

std::vector<double> random_state(int n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<double> u(static_cast<std::size_t>(n));
  for (auto& x : u) x = 0.1 * normal(rng);
  return u;
}

}  // namespace

static void BM_Philox(benchmark::State& state) {
  Philox4x32::Counter c{0, 0, 0, 0};
  for (auto _ : state) {
    c = Philox4x32::generate(c, {1, 2});
    benchmark::DoNotOptimize(c);
  }
}
BENCHMARK(BM_Philox);

static void BM_NoiseIncrement(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const NoiseSpec spec(std::vector<double>(static_cast<std::size_t>(n), 1.0));
  RandomStream stream{1, 0, 0};
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto _ : state) {
    sample_increment(spec, 1e-3, stream, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_NoiseIncrement)->Arg(8)->Arg(32);

static void BM_ConvectionApply(benchmark::State& state) {
  const auto& m = model(static_cast<int>(state.range(0)));
  const auto u = random_state(m.size());
  std::vector<double> out(u.size());
  Eigen::VectorXd scratch;
  for (auto _ : state) {
    m.convection().apply(u, out, scratch);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_ConvectionApply)->Arg(8)->Arg(16)->Arg(32);

static void BM_StepperAdvance(benchmark::State& state) {
  const auto& m = model(static_cast<int>(state.range(0)));
  Stepper stepper(m, 0.5, 1e-3, false);
  const auto u0 = random_state(m.size());
  auto u = u0;
  const std::vector<double> dz(u.size(), 0.0);
  for (auto _ : state) {
    // Restart from a fixed state so repeated decay does not reach denormals.
    std::copy(u0.begin(), u0.end(), u.begin());
    stepper.advance(u, dz);
    benchmark::DoNotOptimize(u.data());
  }
}
BENCHMARK(BM_StepperAdvance)->Arg(8)->Arg(32);

static void BM_PseudospectralTendency(benchmark::State& state) {
  const StokesBasis basis = assemble_basis(geometry(static_cast<int>(state.range(0))));
  const SpectralState s{0.0, random_state(basis.size())};
  for (auto _ : state) benchmark::DoNotOptimize(nonlinear_tendency(s, basis));
}
BENCHMARK(BM_PseudospectralTendency)->Arg(8)->Arg(32)->Unit(benchmark::kMicrosecond);

static void BM_AssembleBasis(benchmark::State& state) {
  const ChannelGeometry g = geometry(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_basis(g));
}
BENCHMARK(BM_AssembleBasis)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
