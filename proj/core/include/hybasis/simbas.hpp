#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hybasis/spatial_basis.hpp"

namespace hybasis {

/// Weights d_a over the P design columns.
struct ContrastSpec {
  std::string name;
  Eigen::VectorXd weights;

  /// Throws ConfigError unless weights has length P and a nonzero entry.
  void validate(int n_predictors) const;

  /// "faces-vs-places": 0.5 (B3 + B11) - 0.5 (B5 + B13), 1-based columns, P >= 13.
  /// "stim1-vs-stim2": B1 - B2 on hrf columns (derivative layout detected from P
  /// and `with_derivative`).
  static ContrastSpec preset(const std::string& name, int n_predictors, bool with_derivative = false);
  /// Comma separated weights, e.g. "1,-1".
  static ContrastSpec parse(const std::string& csv);
};

/// Source of M x Nv contrast draws, read in row blocks.
class ContrastDrawSource {
 public:
  virtual ~ContrastDrawSource() = default;
  virtual int n_draws() const = 0;
  virtual std::size_t n_voxels() const = 0;
  /// Rows [first, first + count) as a count x Nv matrix.
  virtual Eigen::MatrixXd block(int first, int count) const = 0;
};

class MatrixDrawSource final : public ContrastDrawSource {
 public:
  explicit MatrixDrawSource(const Eigen::MatrixXd& draws) : draws_(draws) {}
  int n_draws() const override { return static_cast<int>(draws_.rows()); }
  std::size_t n_voxels() const override { return static_cast<std::size_t>(draws_.cols()); }
  Eigen::MatrixXd block(int first, int count) const override { return draws_.middleRows(first, count); }

 private:
  const Eigen::MatrixXd& draws_;
};

/// Back-projects basis-space contrast draws (M x S) block by block.
class BasisDrawSource final : public ContrastDrawSource {
 public:
  BasisDrawSource(const Eigen::MatrixXd& basis_draws, const CompositeBasis& basis)
      : draws_(basis_draws), basis_(basis) {}
  int n_draws() const override { return static_cast<int>(draws_.rows()); }
  std::size_t n_voxels() const override { return basis_.n_voxels(); }
  Eigen::MatrixXd block(int first, int count) const override {
    return basis_.back_project(draws_.middleRows(first, count));
  }

 private:
  const Eigen::MatrixXd& draws_;
  const CompositeBasis& basis_;
};

struct SignificanceMap {
  double alpha = 0.05;
  int n_draws = 0;
  double q = 0.0;               ///< ceiling-rank (1 - alpha) quantile of z
  Eigen::VectorXd z;            ///< z^(m), m = 1..M
  Eigen::VectorXd mean;         ///< posterior mean C_hat(v)
  Eigen::VectorXd stddev;       ///< posterior std, divisor M - 1
  Eigen::VectorXd p_simbas;     ///< 1 at unanalysed voxels
  std::vector<bool> analysed;
  std::vector<bool> flagged;

  Eigen::VectorXd lower() const { return mean - q * stddev; }
  Eigen::VectorXd upper() const { return mean + q * stddev; }
  Eigen::VectorXd width() const { return 2.0 * q * stddev; }
  std::size_t n_flagged() const;
};

/// Joint credible bands and P_SimBas from M >= 100 draws. Voxels outside
/// `analysed` (default: all) are skipped. Throws NumericalError listing
/// analysed voxels with zero posterior std.
SignificanceMap simbas(const ContrastDrawSource& source, double alpha, const std::vector<bool>* analysed = nullptr,
                       int block_rows = 64);
SignificanceMap simbas(const Eigen::MatrixXd& draws, double alpha, const std::vector<bool>* analysed = nullptr);

/// Smallest rank k with k >= (1 - alpha) M, computed without rounding drift.
int simbas_rank(int n_draws, double alpha);

/// Re-thresholds an existing map at another level.
std::vector<bool> flags_at(const SignificanceMap& map, double alpha);

}  // namespace hybasis
