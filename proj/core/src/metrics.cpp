#include "hybasis/metrics.hpp"

#include <cmath>

#include "hybasis/errors.hpp"

namespace hybasis {

FitMetrics evaluate_fit(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate, const std::vector<bool>& flags,
                        const Eigen::VectorXd& width, const std::vector<bool>* region, double truth_tol) {
  const auto nv = static_cast<std::size_t>(truth.size());
  if (static_cast<std::size_t>(estimate.size()) != nv || flags.size() != nv || static_cast<std::size_t>(width.size()) != nv)
    throw ConfigError("evaluate_fit: truth, estimate, flags and widths must have equal length");
  if (region && region->size() != nv) throw ConfigError("evaluate_fit: region length mismatch");

  FitMetrics m;
  double se = 0.0, wsum = 0.0;
  std::size_t n_null = 0;
  for (std::size_t v = 0; v < nv; ++v) {
    if (region && !(*region)[v]) continue;
    const auto i = static_cast<Eigen::Index>(v);
    ++m.n_voxels;
    const double d = estimate[i] - truth[i];
    se += d * d;
    wsum += width[i];
    const bool active = std::abs(truth[i]) > truth_tol;
    if (active) ++m.n_true;
    else ++n_null;
    if (flags[v]) {
      ++m.n_flagged;
      if (active) ++m.true_positives;
      else ++m.false_positives;
    }
  }
  if (m.n_voxels == 0) throw ConfigError("evaluate_fit: empty region");
  m.mse = se / static_cast<double>(m.n_voxels);
  m.mean_width = wsum / static_cast<double>(m.n_voxels);
  m.fp_rate = n_null ? static_cast<double>(m.false_positives) / static_cast<double>(n_null) : 0.0;
  m.rp_rate = m.n_true ? static_cast<double>(m.true_positives) / static_cast<double>(m.n_true) : 0.0;
  return m;
}

FitMetrics evaluate_fit(const Eigen::VectorXd& truth, const SignificanceMap& map, const std::vector<bool>* region) {
  auto m = evaluate_fit(truth, map.mean, map.flagged, map.width(), region);
  // Band width is only defined where the voxel was analysed.
  double wsum = 0.0;
  std::size_t n = 0;
  const Eigen::VectorXd w = map.width();
  for (std::size_t v = 0; v < map.analysed.size(); ++v) {
    if (!map.analysed[v] || (region && !(*region)[v])) continue;
    wsum += w[static_cast<Eigen::Index>(v)];
    ++n;
  }
  m.mean_width = n ? wsum / static_cast<double>(n) : 0.0;
  return m;
}

}  // namespace hybasis
