#include <benchmark/benchmark.h>

#include <cmath>

#include "nsmp/nonsmooth.hpp"
#include "nsmp/reference_problems.hpp"
#include "nsmp/solver.hpp"

using namespace nsmp;

static void BM_SubdiffEstimate(benchmark::State& state) {
  auto f = [](const Vec& x) { return std::abs(x[0]) + 0.5 * x[1] * x[1]; };
  Vec at = Vec::Zero(2);
  for (auto _ : state) {
    GradientBundle b = subdiff_estimate(f, at, 1e-4, static_cast<int>(state.range(0)), 0);
    benchmark::DoNotOptimize(b.generators.data());
  }
}
BENCHMARK(BM_SubdiffEstimate)->Arg(16)->Arg(64)->Arg(256);

static void BM_HullDistance(benchmark::State& state) {
  Rng rng(1);
  GradientBundle A;
  for (int i = 0; i < state.range(0); ++i) A.generators.push_back(rng.in_ball(Vec::Zero(4), 1.0));
  ConeBundle B;
  B.base_point = Vec::Zero(4);
  B.rays = {rng.direction(4), rng.direction(4)};
  Vec point = rng.in_ball(Vec::Zero(4), 2.0);
  for (auto _ : state) {
    auto res = hull_distance(point, A, B, 1.0);
    benchmark::DoNotOptimize(res.distance);
  }
}
BENCHMARK(BM_HullDistance)->Arg(8)->Arg(64)->Arg(256);

static void BM_DistanceToS(benchmark::State& state) {
  auto ref = load_reference_problem("REF-C");
  Vec x = Vec::Constant(1, 0.5), u = Vec::Constant(1, 1.0);
  for (auto _ : state) {
    auto res = distance_to_S(ref.problem, 0.0, x, u, 0);
    benchmark::DoNotOptimize(res.distance);
  }
}
BENCHMARK(BM_DistanceToS);

static void BM_SolvePenalized(benchmark::State& state) {
  auto ref = load_reference_problem("REF-C");
  DiscreteNLP nlp = discretize(ref.problem, static_cast<int>(state.range(0)));
  nlp.penalty_index = 1.0;
  SolveOptions opts;
  Vec init = Vec::Zero(nlp.layout.dim());
  for (auto _ : state) {
    SolveResult res = solve_penalized(nlp, init, opts);
    benchmark::DoNotOptimize(res.objective);
  }
}
BENCHMARK(BM_SolvePenalized)->Arg(25)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_OracleStep(benchmark::State& state) {
  auto ref = load_reference_problem("REF-A");
  OracleOptions opts;
  opts.steps = 5;
  opts.grid_per_dim = 4;
  for (auto _ : state) {
    OracleResult res = brute_force_oracle(ref.problem, opts);
    benchmark::DoNotOptimize(res.cost);
  }
}
BENCHMARK(BM_OracleStep)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
