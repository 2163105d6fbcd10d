#include <benchmark/benchmark.h>

#include "rha/estimation.hpp"
#include "rha/harness.hpp"
#include "rha/robust.hpp"

using namespace rha;

namespace {

array::ScenarioConfig scenario(int M, int N, int L) {
  array::ScenarioConfig s;
  s.num_antennas = M;
  s.elements_per_antenna = N;
  s.num_paths_alice = s.num_paths_jam = L;
  return s;
}

robust::StackedModel model(const array::ScenarioConfig& s, std::uint64_t seed) {
  array::Rng rng(seed);
  const array::ChannelRealization ch = array::draw_channel(s, rng);
  return robust::build_stacked_model(s, ch.doa_alice, ch.gains_alice, ch.doa_jam, ch.gains_jam);
}

robust::ErrorBalls balls(double r) {
  robust::ErrorBalls b;
  b.alice = {r, r, 1.0};
  b.jam = b.alice;
  return b;
}

}  // namespace

static void BM_AnmSolve(benchmark::State& st) {
  const int G = static_cast<int>(st.range(0));
  est::AnmInput in;
  in.S = est::grid_atom(0.137, G) + 0.5 * est::grid_atom(-0.21, G);
  in.observed.assign(G, true);
  for (auto _ : st) benchmark::DoNotOptimize(est::solve_anm(in));
}
BENCHMARK(BM_AnmSolve)->Arg(8)->Arg(14)->Arg(24)->Unit(benchmark::kMillisecond);

static void BM_EstimatePipeline(benchmark::State& st) {
  const array::ScenarioConfig s = scenario(2, 4, 1);
  for (auto _ : st) {
    array::Rng rng(3);
    const array::ChannelRealization ch = array::draw_channel(s, rng);
    benchmark::DoNotOptimize(est::estimate_channel(s, ch, &rng));
  }
}
BENCHMARK(BM_EstimatePipeline)->Unit(benchmark::kMillisecond);

static void BM_FeasibilitySdp(benchmark::State& st) {
  const int M = static_cast<int>(st.range(0)), N = static_cast<int>(st.range(1));
  const array::ScenarioConfig s = scenario(M, N, 2);
  const robust::StackedModel m = model(s, 1);
  const double gamma = 1e-3 * array::gamma_upper_bound(s);
  for (auto _ : st) benchmark::DoNotOptimize(robust::feasibility_sdp(gamma, m, balls(0.02)));
}
BENCHMARK(BM_FeasibilitySdp)->Args({2, 2})->Args({2, 4})->Args({4, 8})->Unit(benchmark::kMillisecond);

static void BM_Discretize(benchmark::State& st) {
  const int M = 4, N = 8;
  array::Rng rng(5);
  std::uniform_real_distribution<double> u(0, kTwoPi);
  CVec v(M * N);
  for (auto& x : v) x = std::polar(1.0, u(rng));
  for (auto _ : st) benchmark::DoNotOptimize(robust::discretize(v, M, N, 3));
}
BENCHMARK(BM_Discretize);

static void BM_SolveRobust(benchmark::State& st) {
  const array::ScenarioConfig s = scenario(2, 4, 4);
  const robust::StackedModel m = model(s, 2);
  robust::RobustParams p;
  p.boundary_samples = p.interior_samples = 0;
  const double r = static_cast<double>(st.range(0)) / 100.0;
  for (auto _ : st) benchmark::DoNotOptimize(robust::solve_robust(s, m, balls(r), p));
}
BENCHMARK(BM_SolveRobust)->Arg(0)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_Trial(benchmark::State& st) {
  harness::ExperimentConfig c;
  c.scenario = scenario(4, 8, 4);
  const harness::SweepPoint p = harness::apply_sweep(c, 40.0);
  const std::vector<std::string> schemes = {"rha_robust_discrete", "ula_equal_elements"};
  std::uint64_t seed = 0;
  for (auto _ : st) benchmark::DoNotOptimize(harness::run_trials(c, p, schemes, ++seed));
}
BENCHMARK(BM_Trial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
