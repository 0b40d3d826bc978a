#include "hybasis/pipeline.hpp"

#include <chrono>

#include "hybasis/errors.hpp"

namespace hybasis {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::string to_string(FitStage s) {
  switch (s) {
    case FitStage::Basis: return "basis";
    case FitStage::Wavelet: return "wavelet";
    case FitStage::Mcmc: return "mcmc";
  }
  return "basis";
}

FitResult fit_model(const Volume4D& vol_in, const Parcellation* parc, const Eigen::MatrixXd& design,
                    const FitOptions& opts, const FitObserver& observer) {
  opts.model.validate();
  if (design.rows() != vol_in.n_time()) throw ConfigError("design has a different number of frames than the volume");
  vol_in.validate();

  FitResult out;
  FitStage stage = FitStage::Basis;
  try {
    auto t0 = std::chrono::steady_clock::now();
    Volume4D vol = vol_in;
    if (opts.demean) vol.values().rowwise() -= vol.values().colwise().mean();

    std::optional<Parcellation> reconciled;
    const bool uses_rois = opts.mode == BasisMode::CHSB || opts.mode == BasisMode::LSB;
    if (uses_rois) {
      if (!parc) throw ConfigError(to_string(opts.mode) + " requires a parcellation");
      if (vol.mask()) {
        reconciled = reconcile_mask(vol, *parc, Parcellation::kDefaultMinRoiSize);
        parc = &*reconciled;
      }
    } else if (parc) {
      warn(to_string(opts.mode) + " does not use the parcellation; ignoring it");
    }

    out.basis = fit_basis(vol, uses_rois ? parc : nullptr, opts.mode, opts.basis);
    if (observer) observer(stage, out);

    stage = FitStage::Wavelet;
    out.plan = WaveletPlan(vol.n_time(), opts.family, opts.levels);
    const auto tm = transform_model(vol, out.basis, out.plan, design);
    out.noise = estimate_noise_params(tm, out.plan);
    Eigen::VectorXd alpha(static_cast<Eigen::Index>(out.noise.size()));
    for (std::size_t s = 0; s < out.noise.size(); ++s) alpha[static_cast<Eigen::Index>(s)] = out.noise[s].alpha;
    out.timings.initial_values = seconds_since(t0);
    if (observer) observer(stage, out);

    stage = FitStage::Mcmc;
    t0 = std::chrono::steady_clock::now();
    out.draws = gibbs_fit(tm.y_star, tm.x_star, alpha, out.plan.level_index(), opts.model);
    out.timings.mcmc = seconds_since(t0);
    if (observer) observer(stage, out);
  } catch (...) {
    rethrow_with_context("stage '" + to_string(stage) + "'");
  }
  return out;
}

ContrastResult analyse_contrast(const PosteriorDraws& draws, const CompositeBasis& basis, const ContrastSpec& contrast,
                                const ContrastOptions& opts) {
  contrast.validate(draws.n_predictors);
  ContrastResult out;
  auto t0 = std::chrono::steady_clock::now();
  const Eigen::MatrixXd voxel_draws = basis.back_project(draws.contrast(contrast.weights));
  out.projection_seconds = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  const auto analysed = basis.analysed_mask();
  out.map = simbas(voxel_draws, opts.alpha, &analysed);
  out.clusters = cluster_flags(out.map.flagged, basis.dims(), opts.min_cluster_size, opts.adjacency, &out.map.mean);
  out.simbas_seconds = seconds_since(t0);
  return out;
}

ConnectivityResult estimate_connectivity(const PosteriorDraws& draws, const CompositeBasis& basis,
                                         const WaveletPlan& plan, ModeEstimator mode, RvDenominator denom) {
  if (basis.mode() == BasisMode::GSB || basis.mode() == BasisMode::NSB)
    throw ConfigError("connectivity needs an ROI basis (CHSB or LSB); fit used " + to_string(basis.mode()));
  ConnectivityResult out;
  out.covariance = induced_roi_covariance(draws.psi_mean(), draws.alpha, plan, basis, mode);
  out.matrix = rv_connectivity(out.covariance, denom);
  return out;
}

std::vector<ConnectivityMatrix> connectivity_draws(const PosteriorDraws& draws, const CompositeBasis& basis,
                                                   const WaveletPlan& plan, int stride, ModeEstimator mode,
                                                   RvDenominator denom) {
  if (stride < 1) throw ConfigError("connectivity draw stride must be >= 1");
  if (basis.mode() == BasisMode::GSB || basis.mode() == BasisMode::NSB)
    throw ConfigError("connectivity needs an ROI basis (CHSB or LSB); fit used " + to_string(basis.mode()));
  std::vector<ConnectivityMatrix> out;
  for (int d = 0; d < draws.n_draws; d += stride) {
    const Eigen::VectorXd psi = draws.psi.row(d).transpose();
    out.push_back(rv_connectivity(induced_roi_covariance(psi, draws.alpha, plan, basis, mode), denom));
  }
  return out;
}

}  // namespace hybasis
