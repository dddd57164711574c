#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "kamscar/homological.hpp"
#include "kamscar/models.hpp"
#include "kamscar/normal_form.hpp"
#include "kamscar/quantize.hpp"
#include "kamscar/quasimode.hpp"
#include "support.hpp"

namespace {

using namespace kamscar;
using kamscar::testing::layout;
using kamscar::testing::random_series;

const double kGolden = 0.5 * (1.0 + std::sqrt(5.0));

SeriesLayout pendulum_layout(double radius) {
  SeriesLayout l;
  l.dim = 1;
  l.base_point = {1.0};
  l.k_angle = 8;
  l.k_action = 4;
  l.radius = {radius};
  return l;
}

void BM_Multiply(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto l = layout(2, static_cast<int>(state.range(0)), 4, 0.0, 0.5);
  const Series a = random_series(l, 40, 4, 2, rng);
  const Series b = random_series(l, 40, 4, 2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(multiply(a, b));
}
BENCHMARK(BM_Multiply)->Arg(4)->Arg(8)->Arg(12);

void BM_Homological(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto l = layout(2, static_cast<int>(state.range(0)), 3);
  const Series f = angle_part(random_series(l, 80, static_cast<int>(state.range(0)), 3, rng));
  const auto delta = ApproximationFunction::power(1.2, 0.1, 2.0, 2);
  for (auto _ : state) benchmark::DoNotOptimize(solve_homological(f, {1.0, kGolden}, delta));
}
BENCHMARK(BM_Homological)->Arg(8)->Arg(16);

void BM_PendulumNormalForm(benchmark::State& state) {
  const auto H = model_pendulum1d(1.0, pendulum_layout(0.3), 0.05);
  const auto delta = ApproximationFunction::power(4.5, 0.1, 2.0, 1);
  NormalFormOptions o;
  o.r_max = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_iteration(H, delta, o));
}
BENCHMARK(BM_PendulumNormalForm)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

void BM_PendulumBand(benchmark::State& state) {
  const auto H = model_pendulum1d(1.0, pendulum_layout(1.0), 0.05);
  const double h = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) {
    const auto sp = build_matrix(H, 0.05, h, {0}, ActionBox{{0.02}, {1.98}}, 0.4, 0.6);
    benchmark::DoNotOptimize(eigs_in_band(sp));
  }
}
BENCHMARK(BM_PendulumBand)->Arg(40)->Arg(160)->Arg(640)->Unit(benchmark::kMillisecond);

void BM_PendulumQuasimode(benchmark::State& state) {
  const auto H = model_pendulum1d(1.0, pendulum_layout(0.3), 0.05);
  const auto Hs = with_radius(H, {1.0});
  const auto delta = ApproximationFunction::power(4.5, 0.1, 2.0, 1);
  const double h = 1.0 / static_cast<double>(state.range(0));
  const auto sp = build_matrix(Hs, 0.05, h, {0}, ActionBox{{0.02}, {1.98}}, 0.4, 0.6);
  const IntVec m = {static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(build_quasimodes(H, delta, sp, {m}));
}
BENCHMARK(BM_PendulumQuasimode)->Arg(40)->Arg(160)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
