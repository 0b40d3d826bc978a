#pragma once

#include <vector>

#include <Eigen/Dense>

#include "hybasis/simbas.hpp"

namespace hybasis {

struct FitMetrics {
  double mse = 0.0;
  double fp_rate = 0.0;     ///< flagged among voxels with zero true contrast
  double rp_rate = 0.0;     ///< flagged among voxels with nonzero true contrast
  double mean_width = 0.0;  ///< mean joint band width
  std::size_t n_voxels = 0;
  std::size_t n_true = 0;
  std::size_t n_flagged = 0;
  std::size_t false_positives = 0;
  std::size_t true_positives = 0;
};

/// Scores an estimate against the true contrast over `region` (default: all
/// voxels). Voxels with |truth| > `truth_tol` count as truly active.
FitMetrics evaluate_fit(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate, const std::vector<bool>& flags,
                        const Eigen::VectorXd& width, const std::vector<bool>* region = nullptr,
                        double truth_tol = 1e-12);

FitMetrics evaluate_fit(const Eigen::VectorXd& truth, const SignificanceMap& map, const std::vector<bool>* region = nullptr);

}  // namespace hybasis
