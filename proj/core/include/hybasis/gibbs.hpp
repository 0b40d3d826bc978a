#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "hybasis/long_memory.hpp"
#include "hybasis/spatial_basis.hpp"
#include "hybasis/wavelet.hpp"

namespace hybasis {

struct ModelSpec {
  double k_v = 100.0;
  double a0 = 0.01;
  double b0 = 0.01;
  int n_iter = 6000;
  int burn_in = 2000;
  int thin = 5;
  std::uint64_t seed = 1;
  /// Drop the likelihood and sample the joint prior of (b*, psi).
  bool prior_only = false;

  void validate() const;
  /// Number of retained draws, floor((n_iter - burn_in) / thin).
  int retained() const { return (n_iter - burn_in) / thin; }
  /// Shrinkage factor k_v / (1 + k_v).
  double shrinkage() const { return k_v / (1.0 + k_v); }
};

/// Retained MCMC output for S independent series and P predictors.
struct PosteriorDraws {
  int n_draws = 0;
  int n_predictors = 0;
  int n_series = 0;
  /// Draw-major: index ((d * P) + p) * S + s.
  std::vector<double> b_star;
  Eigen::MatrixXd psi;    ///< n_draws x S
  Eigen::VectorXd alpha;  ///< S, held fixed during sampling
  ModelSpec spec;

  double b(int d, int p, int s) const {
    return b_star[(static_cast<std::size_t>(d) * static_cast<std::size_t>(n_predictors) +
                   static_cast<std::size_t>(p)) *
                      static_cast<std::size_t>(n_series) +
                  static_cast<std::size_t>(s)];
  }
  /// P x S coefficient matrix of draw d.
  Eigen::MatrixXd draw(int d) const;
  /// Draws x S matrix of contrast values sum_p w_p b*_{p,s}.
  Eigen::MatrixXd contrast(const Eigen::VectorXd& weights) const;
  Eigen::MatrixXd b_mean() const;  ///< P x S
  Eigen::VectorXd psi_mean() const;
};

/// Wavelet-domain model Y* = W Y^G, X* = W X.
struct TransformedModel {
  Eigen::MatrixXd y_star;  ///< T^W x S
  Eigen::MatrixXd x_star;  ///< T^W x P
};

TransformedModel transform_model(const Eigen::MatrixXd& basis_scores, const WaveletPlan& plan,
                                 const Eigen::MatrixXd& design);
TransformedModel transform_model(const Volume4D& vol, const CompositeBasis& basis, const WaveletPlan& plan,
                                 const Eigen::MatrixXd& design);

/// Weighted sufficient statistics for one series with D^{-1} = diag(weights).
struct SeriesStats {
  Eigen::MatrixXd xtwx;
  Eigen::VectorXd xtwy;
  double ytwy = 0.0;
  Eigen::VectorXd gls;  ///< (X'D^-1 X)^-1 X'D^-1 y
};

/// Throws NumericalError when X'D^-1 X is singular.
SeriesStats series_stats(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Eigen::VectorXd& weights);

/// Per-series (psi, alpha) from the wavelet coefficients of OLS residuals.
/// Degenerate residuals fall back to alpha = eps with a warning.
std::vector<LongMemoryParams> estimate_noise_params(const TransformedModel& model, const WaveletPlan& plan);

/// Runs S independent chains. `series_keys` (default 0..S-1) selects the
/// random substream of each series.
PosteriorDraws gibbs_fit(const Eigen::MatrixXd& y_star, const Eigen::MatrixXd& x_star, const Eigen::VectorXd& alpha,
                         const std::vector<int>& level_index, const ModelSpec& spec,
                         const std::vector<std::uint64_t>* series_keys = nullptr);

/// Streaming moments of back-projected draws in voxel space.
struct VoxelDrawSummary {
  Eigen::MatrixXd mean;      ///< P x Nv
  Eigen::MatrixXd variance;  ///< P x Nv, divisor (draws - 1)
};

/// Maps each draw B* to B = B* Upsilon^T. `visit`, when given, receives each
/// P x Nv draw in order. Draws are processed in blocks to bound memory.
VoxelDrawSummary back_project_draws(const PosteriorDraws& draws, const CompositeBasis& basis,
                                    const std::function<void(int, const Eigen::MatrixXd&)>& visit = {});

/// Draws archive: <stem>.draws.json + <stem>.draws.raw (float64: b_star,
/// psi draw-major, alpha).
void save_draws(const PosteriorDraws& draws, const std::filesystem::path& stem);
PosteriorDraws load_draws(const std::filesystem::path& path);

}  // namespace hybasis
