#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hybasis {

/// Orthogonal Daubechies families, named by filter length (d4 = 4 taps).
enum class WaveletFamily { Haar, D4, D6, D8 };
enum class WaveletBoundary { Periodic };

WaveletFamily parse_wavelet_family(const std::string& name);
std::string to_string(WaveletFamily f);
WaveletBoundary parse_wavelet_boundary(const std::string& name);
std::string to_string(WaveletBoundary b);

/// Low-pass analysis filter (unit norm, sums to sqrt(2)).
const std::vector<double>& lowpass_filter(WaveletFamily f);
/// Quadrature mirror: g[j] = (-1)^j h[L-1-j].
std::vector<double> highpass_filter(WaveletFamily f);

/// Transform layout for series of length T. Series are padded by half-sample
/// symmetric reflection to the next power of two T^W; coefficients are stored
/// as [scaling | level 1 (coarsest detail) | ... | level M (finest detail)].
class WaveletPlan {
 public:
  WaveletPlan() = default;
  /// levels <= 0 selects floor(log2 T) - 2. Throws ConfigError if T < 2^levels.
  WaveletPlan(int n_time, WaveletFamily family = WaveletFamily::D4, int levels = 0,
              WaveletBoundary boundary = WaveletBoundary::Periodic);

  WaveletFamily family() const { return family_; }
  WaveletBoundary boundary() const { return boundary_; }
  int levels() const { return levels_; }
  int n_time() const { return n_time_; }
  int padded_length() const { return padded_; }
  int scaling_count() const { return scaling_count_; }
  /// N_m for m = 1..levels (coarsest to finest).
  int level_count(int m) const { return level_counts_.at(static_cast<std::size_t>(m - 1)); }
  /// 0 for scaling coefficients, m in 1..levels for details.
  const std::vector<int>& level_index() const { return level_index_; }
  /// Index into the original series for each padded position.
  const std::vector<int>& pad_source() const { return pad_source_; }

  Eigen::VectorXd pad(std::span<const double> series) const;

  Eigen::VectorXd forward(std::span<const double> series) const;  ///< length T -> T^W
  Eigen::VectorXd forward_padded(std::span<const double> padded) const;
  Eigen::VectorXd inverse(std::span<const double> coeffs) const;  ///< T^W -> length T
  Eigen::VectorXd inverse_padded(std::span<const double> coeffs) const;

  /// Column-wise forward transform of a T x k matrix.
  Eigen::MatrixXd forward_columns(const Eigen::MatrixXd& m) const;

  /// A(m, t) = sum over coefficients i at level m of W(i, t)^2, for m = 0..levels
  /// and padded positions t. Lets diag(W^T diag(s) W) be formed per level
  /// without materialising W.
  Eigen::MatrixXd squared_row_weights() const;

 private:
  WaveletFamily family_ = WaveletFamily::D4;
  WaveletBoundary boundary_ = WaveletBoundary::Periodic;
  int levels_ = 0;
  int n_time_ = 0;
  int padded_ = 0;
  int scaling_count_ = 0;
  std::vector<int> level_counts_;
  std::vector<int> level_index_;
  std::vector<int> pad_source_;
};

int default_wavelet_levels(int n_time);

/// Convenience wrappers matching the plan methods.
Eigen::VectorXd dwt(std::span<const double> series, const WaveletPlan& plan);
Eigen::VectorXd idwt(std::span<const double> coeffs, const WaveletPlan& plan);

}  // namespace hybasis
