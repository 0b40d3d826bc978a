#include <benchmark/benchmark.h>

#include "bench_util.hpp"
#include "hybasis/gibbs.hpp"
#include "hybasis/wavelet.hpp"

namespace {

using namespace hybasis;

// Paper MCMC settings (6000 iterations) over S series with P = 2.
void BM_GibbsFit(benchmark::State& state) {
  const WaveletPlan plan(100);
  const auto s = state.range(0);
  const Eigen::MatrixXd x = bench::gaussian(plan.padded_length(), 2, 5);
  const Eigen::MatrixXd y = bench::gaussian(plan.padded_length(), s, 6);
  const Eigen::VectorXd alpha = Eigen::VectorXd::Constant(s, 0.5);
  ModelSpec spec;
  spec.n_iter = 6000;
  spec.burn_in = 2000;
  spec.thin = 5;
  for (auto _ : state) benchmark::DoNotOptimize(gibbs_fit(y, x, alpha, plan.level_index(), spec));
  state.SetItemsProcessed(state.iterations() * s * spec.n_iter);
}
BENCHMARK(BM_GibbsFit)->Arg(1)->Arg(30)->Arg(300)->Unit(benchmark::kMillisecond);

}  // namespace
