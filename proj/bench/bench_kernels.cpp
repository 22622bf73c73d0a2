// Serial reference vs OpenMP kernels. The second argument selects the path:
// 0 serial, 1 parallel.

#include <benchmark/benchmark.h>

#include "squeeze/compression.hpp"
#include "squeeze/harness.hpp"
#include "squeeze/info_bounds.hpp"
#include "squeeze/random.hpp"

using namespace squeeze;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(1) == 0 ? Exec::serial : Exec::parallel; }

PipelineContext reference_context(int l, Exec exec) {
  const Problem p = reference_qubit_problem();
  return make_context(p.rho, p.povm, l, 3.0, {}, exec);
}

void BM_StageB(benchmark::State& state) {
  const PipelineContext ctx = reference_context(static_cast<int>(state.range(0)), exec_of(state));
  for (auto _ : state) benchmark::DoNotOptimize(stage_B(ctx));
}

void BM_ProductMarginals(benchmark::State& state) {
  const Exec exec = exec_of(state);
  const PipelineContext ctx = reference_context(static_cast<int>(state.range(0)), exec);
  const WordIndexedSubPovm prod = product_povm(ctx.canon.povm, ctx.l, {}, exec);
  for (auto _ : state) benchmark::DoNotOptimize(marginal_povms(prod, ctx.canon.rho, exec));
}

void BM_TypicalLabels(benchmark::State& state) {
  Rng rng(5);
  const EigenLabeling lab(random_density(2, rng).op());
  for (auto _ : state) {
    benchmark::DoNotOptimize(typical_labels(lab, static_cast<int>(state.range(0)), 2.0, {}, exec_of(state)));
  }
}

void BM_ChernoffMc(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        operator_chernoff_mc(static_cast<int>(state.range(0)), 0.5, 0.5, 64, 2000, 11, exec_of(state)));
  }
}

void BM_EntropyInequalities(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        entropy_lemma_checks(Lemma::product_superadditivity, static_cast<int>(state.range(0)), 3, 4, exec_of(state)));
  }
}

}  // namespace

BENCHMARK(BM_StageB)->ArgsProduct({{4, 5, 6}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProductMarginals)->ArgsProduct({{4, 6, 7}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TypicalLabels)->ArgsProduct({{10, 12}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChernoffMc)->ArgsProduct({{2, 8}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EntropyInequalities)->ArgsProduct({{50}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
