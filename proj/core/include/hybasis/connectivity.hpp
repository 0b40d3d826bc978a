#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hybasis/spatial_basis.hpp"
#include "hybasis/wavelet.hpp"

namespace hybasis {

enum class ModeEstimator { Histogram, Median };

ModeEstimator parse_mode_estimator(const std::string& name);

/// Histogram mode: midpoint of the fullest Freedman-Diaconis bin (first one on
/// ties). Falls back to the median when the spread is negligible.
double mode_estimate(std::span<const double> values, ModeEstimator method = ModeEstimator::Histogram);

/// diag(W^T Sigma^W W) for one series, over the T^W padded positions.
Eigen::VectorXd time_domain_variance(const Eigen::MatrixXd& squared_row_weights, double psi, double alpha);

/// Sigma_ROI = Psi diag(theta) Psi^T over the stacked local components.
struct RoiCovariance {
  Eigen::MatrixXd sigma;
  Eigen::VectorXd theta;  ///< one per basis series
  std::vector<std::int32_t> roi_ids;
  std::vector<int> offsets;  ///< first component of each ROI block
  std::vector<int> sizes;    ///< p_k
  std::vector<std::size_t> voxel_counts;

  Eigen::MatrixXd block(std::size_t j, std::size_t k) const {
    return sigma.block(offsets[j], offsets[k], sizes[j], sizes[k]);
  }
};

/// theta_s = mode of diag(W^T Sigma^W_s W) restricted to the T observed
/// frames. Without a global basis (LSB) the result is diag(theta) and a
/// warning is issued. Throws ConfigError for bases without a local level.
RoiCovariance induced_roi_covariance(const Eigen::VectorXd& psi, const Eigen::VectorXd& alpha, const WaveletPlan& plan,
                                     const CompositeBasis& basis, ModeEstimator mode = ModeEstimator::Histogram);

enum class RvDenominator { Components, Voxels };

struct ConnectivityMatrix {
  Eigen::MatrixXd values;  ///< sqrt(RV), K x K
  std::vector<std::int32_t> roi_ids;
};

/// sqrt(RV) for every ROI pair. Diagonal blocks that are not positive
/// definite get a relative ridge of 1e-8 (with a warning); a block that is
/// still indefinite raises NumericalError naming the ROI.
ConnectivityMatrix rv_connectivity(const RoiCovariance& cov, RvDenominator denom = RvDenominator::Components);

/// sqrt(RV) between two blocks of a joint covariance (used by the matrix
/// version and by tests).
double sqrt_rv(const Eigen::MatrixXd& s_jj, const Eigen::MatrixXd& s_jk, const Eigen::MatrixXd& s_kk, double denom);

/// Inverse square root through the symmetric eigendecomposition; eigenvalues
/// below 1e-10 times the largest are dropped.
Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& spd);

struct Edge {
  std::int32_t roi_a = 0;
  std::int32_t roi_b = 0;
  double value = 0.0;
};

struct StrongPairs {
  std::vector<std::int32_t> rois;  ///< ascending
  std::vector<Edge> edges;         ///< descending value, then (a, b)
};

StrongPairs select_strong_pairs(const ConnectivityMatrix& conn, double threshold);

/// The n largest off-diagonal entries (roi_a < roi_b), descending.
std::vector<Edge> top_pairs(const ConnectivityMatrix& conn, std::size_t n);

void write_connectivity_csv(const ConnectivityMatrix& conn, const std::filesystem::path& file);
void write_connectivity_long_csv(const ConnectivityMatrix& conn, const std::filesystem::path& file);
void write_edges_json(const StrongPairs& pairs, double threshold, const std::filesystem::path& file);
ConnectivityMatrix read_connectivity_csv(const std::filesystem::path& file);

}  // namespace hybasis
