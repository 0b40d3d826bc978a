#include <string>
#include <vector>

#include "hybasis/errors.hpp"
#include "hybasis/pipeline.hpp"
#include "hybasis/simulator.hpp"
#include "test_util.hpp"

namespace hybasis {
namespace {

using testing::WarningCapture;

SimDataset small_dataset(double kappa0 = 3.0) {
  SimConfig cfg;
  cfg.dims = {12, 12, 8};
  cfg.n_rois = 4;
  cfg.min_roi_size = 50;
  cfg.planted = {{1, 2, 0.5}};
  cfg.noise = NoiseKind::ShortRange;
  cfg.kappa0 = kappa0;
  cfg.activation = {{{3.0, 3.0, 4.0}, {2.0, 2.0, 2.0}, 0, 1.0}, {{8.0, 8.0, 4.0}, {2.0, 2.0, 2.0}, 1, 1.0}};
  cfg.seed = 7;
  return gen_activation_dataset(cfg);
}

FitOptions quick_options(BasisMode mode) {
  FitOptions o;
  o.mode = mode;
  o.model.n_iter = 600;
  o.model.burn_in = 200;
  o.model.thin = 2;
  return o;
}

bool has_substr(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

TEST(FitModel, ChsbEndToEndFindsActivation) {
  const auto ds = small_dataset();
  const auto fit = fit_model(ds.volume, &ds.parcellation, ds.design.values, quick_options(BasisMode::CHSB));
  EXPECT_EQ(fit.draws.n_draws, 200);
  EXPECT_EQ(fit.draws.n_predictors, 2);
  EXPECT_EQ(fit.draws.n_series, fit.basis.n_components());
  EXPECT_EQ(fit.plan.padded_length(), 128);
  EXPECT_EQ(static_cast<int>(fit.noise.size()), fit.basis.n_components());
  EXPECT_GT(fit.timings.mcmc, 0.0);

  const auto res = analyse_contrast(fit.draws, fit.basis, ContrastSpec::parse("1,-1"), ContrastOptions{});
  const auto& d = ds.volume.dims();
  const auto a = static_cast<Eigen::Index>(d.index(3, 3, 4));
  const auto b = static_cast<Eigen::Index>(d.index(8, 8, 4));
  EXPECT_GT(res.map.mean[a], 0.5);
  EXPECT_LT(res.map.mean[b], -0.5);
  EXPECT_TRUE(res.map.flagged[static_cast<std::size_t>(a)]);
  EXPECT_TRUE(res.map.flagged[static_cast<std::size_t>(b)]);
  EXPECT_GE(res.clusters.clusters.size(), 2u);
}

TEST(FitModel, ObserverSeesStagesInOrder) {
  const auto ds = small_dataset();
  std::vector<FitStage> seen;
  int series_after_basis = -1;
  bool noise_after_wavelet = false;
  const auto fit = fit_model(ds.volume, &ds.parcellation, ds.design.values, quick_options(BasisMode::LSB),
                             [&](FitStage s, const FitResult& r) {
                               seen.push_back(s);
                               if (s == FitStage::Basis) series_after_basis = r.basis.n_components();
                               if (s == FitStage::Wavelet) noise_after_wavelet = !r.noise.empty() && r.draws.n_draws == 0;
                             });
  EXPECT_EQ(seen, (std::vector<FitStage>{FitStage::Basis, FitStage::Wavelet, FitStage::Mcmc}));
  EXPECT_EQ(series_after_basis, fit.basis.n_components());
  EXPECT_TRUE(noise_after_wavelet);
}

TEST(FitModel, SameSeedSameDraws) {
  const auto ds = small_dataset();
  const auto a = fit_model(ds.volume, &ds.parcellation, ds.design.values, quick_options(BasisMode::CHSB));
  const auto b = fit_model(ds.volume, &ds.parcellation, ds.design.values, quick_options(BasisMode::CHSB));
  EXPECT_EQ(a.draws.b_star, b.draws.b_star);
  EXPECT_EQ(a.draws.psi, b.draws.psi);
}

TEST(FitModel, ErrorsNameTheStage) {
  const auto ds = small_dataset();
  try {
    fit_model(ds.volume, nullptr, ds.design.values, quick_options(BasisMode::CHSB));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_TRUE(has_substr(e.what(), "stage 'basis'")) << e.what();
  }
  auto opts = quick_options(BasisMode::GSB);
  opts.levels = 12;
  try {
    fit_model(ds.volume, nullptr, ds.design.values, opts);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_TRUE(has_substr(e.what(), "stage 'wavelet'")) << e.what();
  }
  Eigen::MatrixXd collinear(ds.design.values.rows(), 2);
  collinear.col(0) = ds.design.values.col(0);
  collinear.col(1) = 2.0 * ds.design.values.col(0);
  try {
    fit_model(ds.volume, nullptr, collinear, quick_options(BasisMode::GSB));
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_TRUE(has_substr(e.what(), "stage '")) << e.what();
  }
}

TEST(FitModel, InputChecksPrecedeStages) {
  const auto ds = small_dataset();
  EXPECT_THROW(fit_model(ds.volume, &ds.parcellation, ds.design.values.topRows(50), quick_options(BasisMode::CHSB)),
               ConfigError);
  auto opts = quick_options(BasisMode::CHSB);
  opts.model.thin = 0;
  EXPECT_THROW(fit_model(ds.volume, &ds.parcellation, ds.design.values, opts), ConfigError);
}

TEST(FitModel, GlobalModeWarnsAboutParcellation) {
  const auto ds = small_dataset();
  WarningCapture cap;
  const auto fit = fit_model(ds.volume, &ds.parcellation, ds.design.values, quick_options(BasisMode::GSB));
  EXPECT_TRUE(cap.contains("does not use the parcellation"));
  EXPECT_EQ(fit.basis.mode(), BasisMode::GSB);
  EXPECT_THROW(estimate_connectivity(fit.draws, fit.basis, fit.plan), ConfigError);
  EXPECT_THROW(connectivity_draws(fit.draws, fit.basis, fit.plan, 10), ConfigError);
}

TEST(Connectivity, ChsbMatrixIsSymmetricWithUnitDiagonal) {
  const auto ds = small_dataset();
  const auto fit = fit_model(ds.volume, &ds.parcellation, ds.design.values, quick_options(BasisMode::CHSB));
  const auto c = estimate_connectivity(fit.draws, fit.basis, fit.plan);
  const auto& m = c.matrix.values;
  ASSERT_EQ(m.rows(), 4);
  EXPECT_LT((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(m(k, k), 1.0, 1e-8);
  EXPECT_GE(m.minCoeff(), 0.0);
  EXPECT_LE(m.maxCoeff(), 1.0 + 1e-9);
  const auto per_draw = connectivity_draws(fit.draws, fit.basis, fit.plan, 50);
  EXPECT_EQ(per_draw.size(), 4u);
  EXPECT_THROW(connectivity_draws(fit.draws, fit.basis, fit.plan, 0), ConfigError);
}

TEST(AnalyseContrast, NullDataFlagsNothingAtStrictAlpha) {
  const auto ds = small_dataset(0.0);
  const auto fit = fit_model(ds.volume, &ds.parcellation, ds.design.values, quick_options(BasisMode::NSB));
  ContrastOptions co;
  co.alpha = 0.01;
  const auto res = analyse_contrast(fit.draws, fit.basis, ContrastSpec::parse("1,-1"), co);
  EXPECT_LE(res.map.n_flagged(), 2u);
  EXPECT_THROW(analyse_contrast(fit.draws, fit.basis, ContrastSpec::parse("1,-1,0"), co), ConfigError);
}

}  // namespace
}  // namespace hybasis
