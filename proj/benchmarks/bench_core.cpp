#include <benchmark/benchmark.h>

#include <vector>

#include "dahr/highdim.hpp"
#include "dahr/model.hpp"
#include "dahr/runtime.hpp"
#include "dahr/solvers.hpp"
#include "dahr/synth.hpp"

namespace {

dahr::Dataset make_data(dahr::Regime regime, std::size_t n, std::size_t p, std::size_t m) {
  dahr::GenConfig gen;
  gen.regime = regime;
  gen.n = n;
  gen.p = p;
  gen.m = m;
  gen.s = 5;
  gen.dist = dahr::ErrorDist::of(dahr::ErrorKind::t2);
  gen.seed = 7;
  return dahr::generate(gen, dahr::default_beta_star(regime, p, 5));
}

void BM_shard_gradient(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  const dahr::Dataset d = make_data(dahr::Regime::lowdim, 400, p, 1);
  const dahr::Coefficients beta = dahr::Coefficients::Zero(static_cast<Eigen::Index>(p));
  for (auto _ : state) benchmark::DoNotOptimize(dahr::shard_gradient(d.shards.front(), beta, 2.0));
}
BENCHMARK(BM_shard_gradient)->Arg(20)->Arg(200);

void BM_gather(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const dahr::Dataset d = make_data(dahr::Regime::lowdim, 400, 20, m);
  const dahr::Coefficients beta = dahr::Coefficients::Zero(20);
  for (auto _ : state) {
    dahr::CommLedger ledger;
    benchmark::DoNotOptimize(dahr::gather_gradients(d.shards, beta, 5.0, ledger));
  }
}
BENCHMARK(BM_gather)->Arg(10)->Arg(100);

void BM_gd_bb(benchmark::State& state) {
  const dahr::Dataset d = make_data(dahr::Regime::lowdim, 400, 20, 1);
  const dahr::SmoothProblem q = dahr::huber_problem(d.shards.front(), 3.0);
  const dahr::Coefficients start = dahr::Coefficients::Zero(20);
  for (auto _ : state) benchmark::DoNotOptimize(dahr::gd_bb_minimize(q, start));
}
BENCHMARK(BM_gd_bb);

void BM_lamm(benchmark::State& state) {
  const dahr::Dataset d = make_data(dahr::Regime::highdim, 250, 1000, 1);
  const dahr::SmoothProblem q = dahr::huber_problem(d.shards.front(), 3.0);
  const dahr::Coefficients start = dahr::Coefficients::Zero(1000);
  for (auto _ : state) benchmark::DoNotOptimize(dahr::lamm_minimize(q, 0.1, start));
}
BENCHMARK(BM_lamm)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
