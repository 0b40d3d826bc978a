#pragma once

#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "hybasis/clusters.hpp"
#include "hybasis/connectivity.hpp"
#include "hybasis/gibbs.hpp"
#include "hybasis/simbas.hpp"
#include "hybasis/spatial_basis.hpp"
#include "hybasis/wavelet.hpp"

namespace hybasis {

struct FitOptions {
  BasisMode mode = BasisMode::CHSB;
  BasisOptions basis;
  WaveletFamily family = WaveletFamily::D4;
  int levels = 0;  ///< 0 = floor(log2 T) - 2
  ModelSpec model;
  /// Remove each voxel's temporal mean before fitting.
  bool demean = true;
};

/// Wall-clock seconds per stage.
struct StageTimings {
  double initial_values = 0.0;  ///< basis fit, DWT, long-memory estimation
  double mcmc = 0.0;
  double projection = 0.0;
  double simbas = 0.0;
  double total() const { return initial_values + mcmc + projection + simbas; }
};

struct FitResult {
  CompositeBasis basis;
  WaveletPlan plan;
  std::vector<LongMemoryParams> noise;  ///< moment estimates per series
  PosteriorDraws draws;
  StageTimings timings;
};

enum class FitStage { Basis, Wavelet, Mcmc };

std::string to_string(FitStage s);

/// Called after each completed stage with the partially filled result.
using FitObserver = std::function<void(FitStage, const FitResult&)>;

/// Basis fit -> DWT -> alpha estimation -> Gibbs. `parc` is required for
/// CHSB/LSB and ignored (with a warning) for GSB/NSB. Errors are rethrown
/// with the failing stage name prepended.
FitResult fit_model(const Volume4D& vol, const Parcellation* parc, const Eigen::MatrixXd& design,
                    const FitOptions& opts, const FitObserver& observer = {});

struct ContrastOptions {
  double alpha = 0.05;
  Adjacency adjacency = Adjacency::Face6;
  std::size_t min_cluster_size = 1;
};

struct ContrastResult {
  SignificanceMap map;
  ClusterReport clusters;
  double projection_seconds = 0.0;
  double simbas_seconds = 0.0;
};

/// Maps contrast draws to voxel space, then SimBas and cluster labelling.
ContrastResult analyse_contrast(const PosteriorDraws& draws, const CompositeBasis& basis, const ContrastSpec& contrast,
                                const ContrastOptions& opts);

struct ConnectivityResult {
  RoiCovariance covariance;
  ConnectivityMatrix matrix;
};

/// Plug-in sqrt(RV) connectivity from posterior mean psi. Throws ConfigError
/// for GSB/NSB fits (no ROI structure).
ConnectivityResult estimate_connectivity(const PosteriorDraws& draws, const CompositeBasis& basis,
                                         const WaveletPlan& plan, ModeEstimator mode = ModeEstimator::Histogram,
                                         RvDenominator denom = RvDenominator::Components);

/// One connectivity matrix per `stride`-th retained draw of psi.
std::vector<ConnectivityMatrix> connectivity_draws(const PosteriorDraws& draws, const CompositeBasis& basis,
                                                   const WaveletPlan& plan, int stride,
                                                   ModeEstimator mode = ModeEstimator::Histogram,
                                                   RvDenominator denom = RvDenominator::Components);

}  // namespace hybasis
