#pragma once

#include <span>

#include <Eigen/Dense>

namespace hybasis {

class WaveletPlan;

/// Wavelet-domain noise model: coefficient n at detail level m has variance
/// psi * 2^(-alpha m), m = 1 the coarsest level.
struct LongMemoryParams {
  double psi = 1.0;    ///< innovation variance
  double alpha = 0.5;  ///< long-memory exponent in (0, 1)
};

inline constexpr double kAlphaClamp = 1e-3;

/// Method-of-moments fit: least squares of log2(mean square at level m) on m
/// over detail levels (level index 0, the scaling block, is ignored). alpha is
/// clamped to [eps, 1 - eps] and psi refitted at the clamped slope.
/// Throws ConfigError with fewer than 2 usable levels, NumericalError
/// ("degenerate series") when a level has zero mean square.
LongMemoryParams estimate_long_memory(std::span<const double> coeffs, std::span<const int> level_index,
                                      double eps = kAlphaClamp);

/// Variance multipliers 2^(-alpha m) per coefficient; the scaling block takes
/// the coarsest detail level's value (m = 1).
Eigen::VectorXd level_variance_profile(std::span<const int> level_index, double alpha);

}  // namespace hybasis
