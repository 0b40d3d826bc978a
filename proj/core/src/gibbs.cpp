#include "hybasis/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <sstream>

#include "hybasis/errors.hpp"
#include "hybasis/rng.hpp"

namespace hybasis {

void ModelSpec::validate() const {
  if (!(k_v > 0.0)) throw ConfigError("k_v must be positive");
  if (!(a0 > 0.0) || !(b0 > 0.0)) throw ConfigError("inverse-gamma hyperparameters a0, b0 must be positive");
  if (n_iter <= 0) throw ConfigError("n_iter must be positive");
  if (burn_in < 0 || burn_in >= n_iter) throw ConfigError("burn_in must lie in [0, n_iter)");
  if (thin < 1) throw ConfigError("thin must be >= 1");
  if (retained() < 1) throw ConfigError("MCMC settings retain no draws");
}

Eigen::MatrixXd PosteriorDraws::draw(int d) const {
  Eigen::MatrixXd out(n_predictors, n_series);
  for (int p = 0; p < n_predictors; ++p)
    for (int s = 0; s < n_series; ++s) out(p, s) = b(d, p, s);
  return out;
}

Eigen::MatrixXd PosteriorDraws::contrast(const Eigen::VectorXd& weights) const {
  if (weights.size() != n_predictors) throw ConfigError("contrast length does not match predictor count");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_draws, n_series);
  for (int d = 0; d < n_draws; ++d)
    for (int p = 0; p < n_predictors; ++p) {
      const double w = weights[p];
      if (w == 0.0) continue;
      for (int s = 0; s < n_series; ++s) out(d, s) += w * b(d, p, s);
    }
  return out;
}

Eigen::MatrixXd PosteriorDraws::b_mean() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_predictors, n_series);
  for (int d = 0; d < n_draws; ++d) m += draw(d);
  return n_draws > 0 ? Eigen::MatrixXd(m / n_draws) : m;
}

Eigen::VectorXd PosteriorDraws::psi_mean() const { return psi.colwise().mean().transpose(); }

TransformedModel transform_model(const Eigen::MatrixXd& scores, const WaveletPlan& plan, const Eigen::MatrixXd& design) {
  if (scores.rows() != plan.n_time() || design.rows() != plan.n_time())
    throw ConfigError("series length does not match wavelet plan");
  TransformedModel m;
  m.y_star.resize(plan.padded_length(), scores.cols());
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    const Eigen::VectorXd col = scores.col(c);
    m.y_star.col(c) = plan.forward(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
  }
  m.x_star = plan.forward_columns(design);
  return m;
}

TransformedModel transform_model(const Volume4D& vol, const CompositeBasis& basis, const WaveletPlan& plan,
                                 const Eigen::MatrixXd& design) {
  return transform_model(basis.project(vol.values()), plan, design);
}

SeriesStats series_stats(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Eigen::VectorXd& w) {
  SeriesStats st;
  st.xtwx = x.transpose() * w.asDiagonal() * x;
  st.xtwy = x.transpose() * (w.asDiagonal() * y);
  st.ytwy = y.dot(w.asDiagonal() * y);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(st.xtwx, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(eig.eigenvalues().minCoeff() > 1e-12 * std::max(lmax, 1e-300)))
    throw NumericalError("X*' D^-1 X* is singular (design columns are rank deficient)");
  st.gls = st.xtwx.llt().solve(st.xtwy);
  return st;
}

std::vector<LongMemoryParams> estimate_noise_params(const TransformedModel& model, const WaveletPlan& plan) {
  const auto s_count = model.y_star.cols();
  std::vector<LongMemoryParams> out(static_cast<std::size_t>(s_count));
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(model.x_star);
  const Eigen::MatrixXd resid = model.y_star - model.x_star * qr.solve(model.y_star);
  const auto& li = plan.level_index();
  std::vector<int> degenerate(static_cast<std::size_t>(s_count), 0);
#pragma omp parallel for schedule(static)
  for (Eigen::Index s = 0; s < s_count; ++s) {
    const Eigen::VectorXd r = resid.col(s);
    try {
      out[static_cast<std::size_t>(s)] =
          estimate_long_memory(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())), li);
    } catch (const NumericalError&) {
      out[static_cast<std::size_t>(s)] = {std::max(r.squaredNorm() / std::max<double>(1.0, static_cast<double>(r.size())), 1e-12),
                                          kAlphaClamp};
      degenerate[static_cast<std::size_t>(s)] = 1;
    }
  }
  const auto n_bad = std::count(degenerate.begin(), degenerate.end(), 1);
  if (n_bad > 0) {
    std::ostringstream os;
    os << n_bad << " series have degenerate residual wavelet levels; alpha set to " << kAlphaClamp;
    warn(os.str());
  }
  return out;
}

namespace {

struct ChainResult {
  std::vector<double> b;  // n_draws x P, draw-major
  std::vector<double> psi;
};

ChainResult run_chain(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Eigen::VectorXd& w,
                      const ModelSpec& spec, std::uint64_t key, int series) {
  const auto p = static_cast<int>(x.cols());
  const double tw = static_cast<double>(x.rows());
  const double c = spec.shrinkage();

  SeriesStats st;
  try {
    st = series_stats(y, x, w);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " at series " + std::to_string(series));
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(st.xtwx);
  const Eigen::MatrixXd l_upper = llt.matrixU();  // xtwx = U^T U

  Eigen::VectorXd mean;
  double cov_scale;  // cov = cov_scale * psi * xtwx^{-1}
  double shape, data_rate_ytwy;
  if (spec.prior_only) {
    mean = Eigen::VectorXd::Zero(p);
    cov_scale = spec.k_v;
    shape = spec.a0 + 0.5 * p;
    data_rate_ytwy = 0.0;
  } else {
    mean = c * st.gls;
    cov_scale = c;
    shape = spec.a0 + 0.5 * (tw + p);
    data_rate_ytwy = st.ytwy;
  }

  double psi;
  if (spec.prior_only) {
    psi = spec.b0 / (spec.a0 + 1.0);
  } else {
    const double rss = std::max(0.0, st.ytwy - st.gls.dot(st.xtwy));
    psi = tw > p ? rss / (tw - p) : rss;
    if (!(psi > 0.0)) psi = spec.b0 / (spec.a0 + 1.0);
  }

  auto rng = substream(spec.seed, key);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::gamma_distribution<double> gamma(shape, 1.0);

  ChainResult out;
  const auto n_draws = static_cast<std::size_t>(spec.retained());
  out.b.reserve(n_draws * static_cast<std::size_t>(p));
  out.psi.reserve(n_draws);

  Eigen::VectorXd z(p), b(p);
  for (int it = 0; it < spec.n_iter; ++it) {
    for (int j = 0; j < p; ++j) z[j] = normal(rng);
    // U^{-1} z has covariance (U^T U)^{-1} = xtwx^{-1}.
    b = mean + std::sqrt(cov_scale * psi) * l_upper.triangularView<Eigen::Upper>().solve(z);

    const double quad = b.dot(st.xtwx * b);
    double rate = spec.b0 + 0.5 * quad / spec.k_v;
    if (!spec.prior_only) rate += 0.5 * std::max(0.0, data_rate_ytwy - 2.0 * b.dot(st.xtwy) + quad);
    psi = rate / gamma(rng);

    if (!std::isfinite(psi) || !b.allFinite()) {
      std::ostringstream os;
      os << "non-finite draw at iteration " << it << " of series " << series;
      throw NumericalError(os.str());
    }
    if (it >= spec.burn_in && (it - spec.burn_in + 1) % spec.thin == 0) {
      out.b.insert(out.b.end(), b.data(), b.data() + p);
      out.psi.push_back(psi);
    }
  }
  return out;
}

}  // namespace

PosteriorDraws gibbs_fit(const Eigen::MatrixXd& y_star, const Eigen::MatrixXd& x_star, const Eigen::VectorXd& alpha,
                         const std::vector<int>& level_index, const ModelSpec& spec,
                         const std::vector<std::uint64_t>* series_keys) {
  spec.validate();
  const auto s_count = static_cast<int>(y_star.cols());
  const auto p = static_cast<int>(x_star.cols());
  if (y_star.rows() != x_star.rows()) throw ConfigError("Y* and X* row counts differ");
  if (static_cast<std::size_t>(y_star.rows()) != level_index.size())
    throw ConfigError("level index length does not match Y* rows");
  if (alpha.size() != s_count) throw ConfigError("alpha length does not match series count");
  if (series_keys && series_keys->size() != static_cast<std::size_t>(s_count))
    throw ConfigError("series key count does not match series count");
  if (p < 1) throw ConfigError("design has no columns");

  PosteriorDraws out;
  out.n_draws = spec.retained();
  out.n_predictors = p;
  out.n_series = s_count;
  out.spec = spec;
  out.alpha = alpha;
  out.b_star.assign(static_cast<std::size_t>(out.n_draws) * static_cast<std::size_t>(p) * static_cast<std::size_t>(s_count),
                    0.0);
  out.psi.resize(out.n_draws, s_count);

  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(s_count));
#pragma omp parallel for schedule(dynamic, 4)
  for (int s = 0; s < s_count; ++s) {
    try {
      const Eigen::VectorXd w =
          level_variance_profile(level_index, alpha[s]).cwiseInverse();  // D^{-1}
      const std::uint64_t key = series_keys ? (*series_keys)[static_cast<std::size_t>(s)] : static_cast<std::uint64_t>(s);
      const auto chain = run_chain(y_star.col(s), x_star, w, spec, key, s);
      for (int d = 0; d < out.n_draws; ++d) {
        out.psi(d, s) = chain.psi[static_cast<std::size_t>(d)];
        for (int j = 0; j < p; ++j)
          out.b_star[(static_cast<std::size_t>(d) * static_cast<std::size_t>(p) + static_cast<std::size_t>(j)) *
                         static_cast<std::size_t>(s_count) +
                     static_cast<std::size_t>(s)] =
              chain.b[static_cast<std::size_t>(d) * static_cast<std::size_t>(p) + static_cast<std::size_t>(j)];
      }
    } catch (...) {
      errors[static_cast<std::size_t>(s)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

VoxelDrawSummary back_project_draws(const PosteriorDraws& draws, const CompositeBasis& basis,
                                    const std::function<void(int, const Eigen::MatrixXd&)>& visit) {
  if (draws.n_series != basis.n_components()) throw ConfigError("draws and basis have different series counts");
  const auto nv = static_cast<Eigen::Index>(basis.n_voxels());
  const int p = draws.n_predictors;
  VoxelDrawSummary out;
  out.mean = Eigen::MatrixXd::Zero(p, nv);
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(p, nv);
  // Welford update per draw.
  for (int d = 0; d < draws.n_draws; ++d) {
    const Eigen::MatrixXd b = basis.back_project(draws.draw(d));
    if (visit) visit(d, b);
    const Eigen::MatrixXd delta = b - out.mean;
    out.mean += delta / static_cast<double>(d + 1);
    m2.array() += delta.array() * (b - out.mean).array();
  }
  out.variance = draws.n_draws > 1 ? Eigen::MatrixXd(m2 / static_cast<double>(draws.n_draws - 1))
                                   : Eigen::MatrixXd::Zero(p, nv);
  return out;
}

}  // namespace hybasis
