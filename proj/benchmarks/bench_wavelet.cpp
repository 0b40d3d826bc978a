#include <benchmark/benchmark.h>

#include "bench_util.hpp"
#include "hybasis/wavelet.hpp"

namespace {

using namespace hybasis;

void BM_DwtSeries(benchmark::State& state) {
  const WaveletPlan plan(static_cast<int>(state.range(0)), WaveletFamily::D4);
  const Eigen::VectorXd x = bench::gaussian(state.range(0), 1, 2);
  for (auto _ : state) benchmark::DoNotOptimize(plan.forward(bench::view(x)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DwtSeries)->Arg(100)->Arg(1024)->Arg(16384);

void BM_DwtRoundTrip(benchmark::State& state) {
  const WaveletPlan plan(1000, static_cast<WaveletFamily>(state.range(0)));
  const Eigen::VectorXd x = bench::gaussian(1000, 1, 3);
  for (auto _ : state) benchmark::DoNotOptimize(plan.inverse(bench::view(plan.forward(bench::view(x)))));
  state.SetLabel(to_string(plan.family()));
}
BENCHMARK(BM_DwtRoundTrip)
    ->Arg(static_cast<int>(WaveletFamily::Haar))
    ->Arg(static_cast<int>(WaveletFamily::D4))
    ->Arg(static_cast<int>(WaveletFamily::D8));

// Column transform of a T x S score matrix, as done once per fit.
void BM_DwtColumns(benchmark::State& state) {
  const WaveletPlan plan(100);
  const Eigen::MatrixXd m = bench::gaussian(100, state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(plan.forward_columns(m));
}
BENCHMARK(BM_DwtColumns)->Arg(100)->Arg(25600)->Unit(benchmark::kMillisecond);

}  // namespace
