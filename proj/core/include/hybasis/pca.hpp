#pragma once

#include <Eigen/Dense>

namespace hybasis {

enum class PcaMethod {
  Auto,  ///< thin SVD when columns <= 4 * rows, otherwise the row-space Gram route
  Svd,   ///< bidiagonal divide-and-conquer SVD of the data block
  Gram,  ///< eigen-decomposition of the T x T Gram matrix Y Y^T (never forms Y^T Y)
};

/// Principal axes of the column space of a T x n data block, i.e. the
/// eigenvectors of Y^T Y. Eigenvalues are the squared singular values.
struct PcaResult {
  Eigen::MatrixXd loadings;     ///< n x retained, orthonormal columns
  Eigen::VectorXd eigenvalues;  ///< all nonzero eigenvalues, descending
  int retained = 0;
  double threshold = 1.0;

  double total_variance() const { return eigenvalues.sum(); }
  double cumulative_fraction(int count) const;
};

/// Smallest L with (sum of the first L eigenvalues) / total >= threshold.
int cutoff_for_fraction(const Eigen::VectorXd& eigenvalues_desc, double threshold);

/// Rank-truncated PCA. Loadings follow a sign convention: the entry with the
/// largest magnitude in each column is positive. Throws NumericalError when
/// the block has rank 0 and ConfigError for thresholds outside (0, 1].
PcaResult truncated_pca(const Eigen::MatrixXd& data, double threshold, PcaMethod method = PcaMethod::Auto);

/// Flips column signs so that each column's largest-magnitude entry is positive.
void apply_sign_convention(Eigen::MatrixXd& loadings);

}  // namespace hybasis
