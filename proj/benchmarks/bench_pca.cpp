#include <benchmark/benchmark.h>

#include "bench_util.hpp"
#include "hybasis/pca.hpp"
#include "hybasis/simulator.hpp"
#include "hybasis/spatial_basis.hpp"

namespace {

using namespace hybasis;

// ROI-sized block: T = 100 frames, n voxels.
void BM_TruncatedPca(benchmark::State& state) {
  const auto method = static_cast<PcaMethod>(state.range(1));
  const Eigen::MatrixXd y = bench::gaussian(100, state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(truncated_pca(y, 0.9, method));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_TruncatedPca)
    ->ArgsProduct({{200, 800, 3200}, {static_cast<int>(PcaMethod::Svd), static_cast<int>(PcaMethod::Gram)}})
    ->Unit(benchmark::kMillisecond);

void BM_CompositeBasisFullGrid(benchmark::State& state) {
  SimConfig cfg;
  cfg.noise = NoiseKind::ShortRange;
  const auto ds = gen_activation_dataset(cfg);
  const auto mode = static_cast<BasisMode>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_basis(ds.volume, &ds.parcellation, mode, BasisOptions{}));
  state.SetLabel(to_string(mode));
}
BENCHMARK(BM_CompositeBasisFullGrid)
    ->Arg(static_cast<int>(BasisMode::CHSB))
    ->Arg(static_cast<int>(BasisMode::GSB))
    ->Unit(benchmark::kMillisecond);

}  // namespace
