#include <cmath>

#include "hybasis/connectivity.hpp"
#include "hybasis/errors.hpp"
#include "test_util.hpp"

namespace hybasis {
namespace {

using testing::random_matrix;
using testing::TempDir;

RoiCovariance make_cov(const Eigen::MatrixXd& sigma, const std::vector<int>& sizes) {
  RoiCovariance c;
  c.sigma = sigma;
  int off = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    c.roi_ids.push_back(static_cast<std::int32_t>(k + 1));
    c.offsets.push_back(off);
    c.sizes.push_back(sizes[k]);
    c.voxel_counts.push_back(static_cast<std::size_t>(10 * sizes[k]));
    off += sizes[k];
  }
  c.theta = Eigen::VectorXd::Ones(off);
  return c;
}

Eigen::MatrixXd random_spd(int n, unsigned seed) {
  const Eigen::MatrixXd a = random_matrix(n, n + 3, seed);
  return a * a.transpose() / (n + 3);
}

Eigen::MatrixXd random_orthogonal(int n, unsigned seed) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(n, n, seed));
  return qr.householderQ();
}

TEST(SqrtRv, ScalarCaseIsAbsoluteCorrelation) {
  for (double rho : {-0.9, -0.3, 0.0, 0.45, 0.8}) {
    Eigen::Matrix2d s;
    s << 2.0, rho * std::sqrt(2.0 * 0.5), rho * std::sqrt(2.0 * 0.5), 0.5;
    const auto c = rv_connectivity(make_cov(s, {1, 1}));
    EXPECT_NEAR(c.values(0, 1), std::abs(rho), 1e-10);
  }
}

TEST(SqrtRv, BlockDiagonalCovarianceGivesZero) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(5, 5);
  s.topLeftCorner(2, 2) = random_spd(2, 1);
  s.bottomRightCorner(3, 3) = random_spd(3, 2);
  const auto c = rv_connectivity(make_cov(s, {2, 3}));
  EXPECT_EQ(c.values(0, 1), 0.0);
  EXPECT_EQ(c.values(0, 0), 1.0);
}

TEST(SqrtRv, IdenticalBlocksGiveOne) {
  const Eigen::MatrixXd a = random_spd(3, 3);
  Eigen::MatrixXd s(6, 6);
  s << a, a, a, a;
  EXPECT_NEAR(sqrt_rv(a, a, a, std::sqrt(3.0 * 3.0)), 1.0, 1e-10);
}

TEST(SqrtRv, InvariantUnderBlockOrthogonalTransforms) {
  const Eigen::MatrixXd s = random_spd(7, 4);
  const std::vector<int> sizes{2, 3, 2};
  const auto base = rv_connectivity(make_cov(s, sizes));
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(7, 7);
  q.block(0, 0, 2, 2) = random_orthogonal(2, 5);
  q.block(2, 2, 3, 3) = random_orthogonal(3, 6);
  q.block(5, 5, 2, 2) = random_orthogonal(2, 7);
  const auto rotated = rv_connectivity(make_cov(q * s * q.transpose(), sizes));
  EXPECT_LT((base.values - rotated.values).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SqrtRv, SymmetricAndBoundedForRandomCovariances) {
  for (unsigned seed = 10; seed < 20; ++seed) {
    const auto c = rv_connectivity(make_cov(random_spd(9, seed), {3, 2, 4}));
    EXPECT_EQ(c.values, c.values.transpose());
    EXPECT_GE(c.values.minCoeff(), -1e-6);
    EXPECT_LE(c.values.maxCoeff(), 1.0 + 1e-6);
  }
}

TEST(SqrtRv, SingularDiagonalBlockGetsRidgeAndWarning) {
  Eigen::MatrixXd s = random_spd(4, 30);
  s.row(1).setZero();
  s.col(1).setZero();
  s(1, 1) = 0.0;
  testing::WarningCapture w;
  const auto c = rv_connectivity(make_cov(s, {2, 2}));
  EXPECT_TRUE(w.contains("ridge"));
  EXPECT_TRUE(std::isfinite(c.values(0, 1)));
}

TEST(InverseSqrt, WhitensSpdMatrix) {
  const Eigen::MatrixXd a = random_spd(5, 31);
  const Eigen::MatrixXd r = inverse_sqrt(a);
  EXPECT_LT((r * a * r - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(StrongPairs, HandmadeMatrix) {
  ConnectivityMatrix c;
  c.roi_ids = {3, 5, 9};
  c.values.resize(3, 3);
  c.values << 1.0, 0.75, 0.2, 0.75, 1.0, 0.9, 0.2, 0.9, 1.0;
  const auto s = select_strong_pairs(c, 0.7);
  ASSERT_EQ(s.edges.size(), 2u);
  EXPECT_EQ(s.edges[0].roi_a, 5);
  EXPECT_EQ(s.edges[0].roi_b, 9);
  EXPECT_EQ(s.edges[1].roi_a, 3);
  EXPECT_EQ(s.edges[1].roi_b, 5);
  EXPECT_EQ(s.rois, (std::vector<std::int32_t>{3, 5, 9}));
  EXPECT_TRUE(select_strong_pairs(c, 1.1).edges.empty());
  const auto top = top_pairs(c, 1);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0].value, 0.9);
}

TEST(ModeEstimate, HistogramFindsDenseRegion) {
  std::vector<double> v;
  for (int i = 0; i < 200; ++i) v.push_back(5.0 + 0.001 * (i % 7));
  for (int i = 0; i < 40; ++i) v.push_back(1.0 + 0.25 * i);
  EXPECT_NEAR(mode_estimate(v), 5.0, 0.3);
  EXPECT_NEAR(mode_estimate(std::vector<double>(10, 2.5)), 2.5, 1e-15);
  const std::vector<double> odd{1, 2, 3, 10, 11};
  EXPECT_EQ(mode_estimate(odd, ModeEstimator::Median), 3.0);
  EXPECT_THROW(mode_estimate(std::vector<double>{}), ConfigError);
}

TEST(TimeDomainVariance, WhiteNoiseIsIsotropic) {
  const WaveletPlan plan(64);
  const auto d = time_domain_variance(plan.squared_row_weights(), 1.7, 0.0);
  EXPECT_LT((d.array() - 1.7).abs().maxCoeff(), 1e-12);
}

TEST(TimeDomainVariance, MatchesDenseTripleProductAtSixteen) {
  const WaveletPlan plan(16, WaveletFamily::D4, 2);
  const Eigen::MatrixXd w = testing::dense_dwt_d4(16, 2);
  const double psi = 0.8, alpha = 0.6;
  Eigen::VectorXd sw(16);
  for (int i = 0; i < 16; ++i) sw[i] = psi * std::pow(2.0, -alpha * std::max(1, plan.level_index()[static_cast<std::size_t>(i)]));
  const Eigen::VectorXd oracle = (w.transpose() * sw.asDiagonal() * w).diagonal();
  EXPECT_LT((time_domain_variance(plan.squared_row_weights(), psi, alpha) - oracle).cwiseAbs().maxCoeff(), 1e-10);
}

struct RoiFixture {
  Dims dims{4, 4, 1};
  Volume4D vol;
  Parcellation parc;
};

RoiFixture roi_fixture() {
  RoiFixture f;
  std::vector<std::int32_t> labels(16);
  for (int i = 0; i < 16; ++i) labels[static_cast<std::size_t>(i)] = 1 + i / 4;
  f.parc = Parcellation(f.dims, labels, 1);
  f.vol = Volume4D(f.dims, random_matrix(32, 16, 40));
  return f;
}

TEST(InducedCovariance, WhiteNoiseThetaEqualsPsi) {
  const auto f = roi_fixture();
  const auto basis = fit_basis(f.vol, &f.parc, BasisMode::CHSB, {});
  const int s = basis.n_components();
  const Eigen::VectorXd psi = Eigen::VectorXd::LinSpaced(s, 0.5, 2.0);
  const auto cov = induced_roi_covariance(psi, Eigen::VectorXd::Zero(s), WaveletPlan(32), basis);
  EXPECT_LT((cov.theta - psi).cwiseAbs().maxCoeff(), 1e-12);
  const auto& g = basis.global()->loadings;
  EXPECT_LT((cov.sigma - g * psi.asDiagonal() * g.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(InducedCovariance, LocalOnlyBasisIsDiagonalWithWarning) {
  const auto f = roi_fixture();
  const auto basis = fit_basis(f.vol, &f.parc, BasisMode::LSB, {});
  const int s = basis.n_components();
  testing::WarningCapture w;
  const auto cov =
      induced_roi_covariance(Eigen::VectorXd::Ones(s), Eigen::VectorXd::Constant(s, 0.3), WaveletPlan(32), basis);
  EXPECT_FALSE(w.messages().empty());
  EXPECT_EQ(cov.sigma, Eigen::MatrixXd(cov.theta.asDiagonal()));
}

TEST(InducedCovariance, GlobalOnlyBasisIsConfigError) {
  const auto f = roi_fixture();
  const auto basis = fit_basis(f.vol, nullptr, BasisMode::GSB, {});
  const int s = basis.n_components();
  EXPECT_THROW(induced_roi_covariance(Eigen::VectorXd::Ones(s), Eigen::VectorXd::Zero(s), WaveletPlan(32), basis),
               ConfigError);
}

TEST(ConnectivityCsv, RoundTrip) {
  TempDir tmp;
  const auto c = rv_connectivity(make_cov(random_spd(6, 50), {2, 2, 2}));
  write_connectivity_csv(c, tmp / "c.csv");
  const auto r = read_connectivity_csv(tmp / "c.csv");
  EXPECT_EQ(r.roi_ids, c.roi_ids);
  EXPECT_EQ(r.values, c.values);
}

}  // namespace
}  // namespace hybasis
