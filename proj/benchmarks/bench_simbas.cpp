#include <benchmark/benchmark.h>

#include "bench_util.hpp"
#include "hybasis/simbas.hpp"

namespace {

using namespace hybasis;

// M = 800 draws over Nv voxels.
void BM_SimBas(benchmark::State& state) {
  const Eigen::MatrixXd draws = bench::gaussian(800, state.range(0), 7);
  for (auto _ : state) benchmark::DoNotOptimize(simbas(draws, 0.05));
  state.SetItemsProcessed(state.iterations() * 800 * state.range(0));
}
BENCHMARK(BM_SimBas)->Arg(1000)->Arg(25600)->Unit(benchmark::kMillisecond);

}  // namespace
