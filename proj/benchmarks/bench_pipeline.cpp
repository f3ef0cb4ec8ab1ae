// Micro-benchmarks for the hot pipeline stages: forward simulation,
// regression backward solve and the adjoint pass.

#include <benchmark/benchmark.h>

#include "mfsmp/backward.hpp"
#include "mfsmp/cost.hpp"
#include "mfsmp/smp.hpp"

using namespace mfsmp;

namespace {

LinearFeaturePolicy bench_policy(const CoefficientSet& model) {
  const auto fs = FeatureSet::from_names({"const", "t"});
  Mat theta(model.dims.k_u, 2);
  theta << 0.3, -0.1;
  return LinearFeaturePolicy(fs, theta, model.constraint);
}

void BM_forward(benchmark::State& state) {
  const auto model = make_model("nonconvex");
  const auto pol = bench_policy(model);
  const TimeGrid grid(1.0, 50);
  const int N = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto fwd = simulate_forward(model, pol, grid, N, 1, 1);
    benchmark::DoNotOptimize(fwd.rho);
  }
  state.SetItemsProcessed(state.iterations() * int64_t(N) * grid.steps);
}

void BM_forward_workers(benchmark::State& state) {
  const auto model = make_model("nonconvex");
  const auto pol = bench_policy(model);
  const TimeGrid grid(1.0, 50);
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto fwd = simulate_forward(model, pol, grid, 4000, 1, workers);
    benchmark::DoNotOptimize(fwd.rho);
  }
}

void BM_backward(benchmark::State& state) {
  const auto model = make_model("nonconvex");
  const auto pol = bench_policy(model);
  const TimeGrid grid(1.0, 50);
  const int N = static_cast<int>(state.range(0));
  const auto fwd = simulate_forward(model, pol, grid, N, 1, 1);
  for (auto _ : state) {
    auto bwd = solve_backward_y(model, fwd, pol);
    benchmark::DoNotOptimize(bwd.y_mean);
  }
}

void BM_adjoint(benchmark::State& state) {
  const auto model = make_model("nonconvex");
  const auto pol = bench_policy(model);
  const TimeGrid grid(1.0, 50);
  const int N = static_cast<int>(state.range(0));
  const auto fwd = simulate_forward(model, pol, grid, N, 1, 1);
  const auto bwd = solve_backward_y(model, fwd, pol);
  PicardOptions picard;
  picard.damping = 1.0;
  for (auto _ : state) {
    auto adj = solve_adjoint(model, fwd, bwd, pol, picard);
    benchmark::DoNotOptimize(adj.r);
  }
}

void BM_gradient(benchmark::State& state) {
  const auto model = make_model("nonconvex");
  const auto pol = bench_policy(model);
  const TimeGrid grid(1.0, 50);
  const int N = static_cast<int>(state.range(0));
  const auto fwd = simulate_forward(model, pol, grid, N, 1, 1);
  const auto bwd = solve_backward_y(model, fwd, pol);
  PicardOptions picard;
  picard.damping = 1.0;
  const auto adj = solve_adjoint(model, fwd, bwd, pol, picard);
  for (auto _ : state) {
    auto gf = gradient(model, fwd, bwd, adj, pol);
    benchmark::DoNotOptimize(gf.grad_theta);
  }
}

}  // namespace

BENCHMARK(BM_forward)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_forward_workers)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_backward)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_adjoint)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gradient)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
