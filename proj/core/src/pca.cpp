#include "hybasis/pca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hybasis/errors.hpp"

namespace hybasis {
namespace {

// Relative cutoff below which a singular value counts as zero.
double rank_tolerance(Eigen::Index rows, Eigen::Index cols) {
  return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * 16.0;
}

}  // namespace

double PcaResult::cumulative_fraction(int count) const {
  const double total = total_variance();
  if (total <= 0.0) return 0.0;
  return eigenvalues.head(std::min<Eigen::Index>(count, eigenvalues.size())).sum() / total;
}

int cutoff_for_fraction(const Eigen::VectorXd& ev, double threshold) {
  const double total = ev.sum();
  double acc = 0.0;
  for (Eigen::Index l = 0; l < ev.size(); ++l) {
    acc += ev[l];
    if (acc / total >= threshold - 1e-12) return static_cast<int>(l + 1);
  }
  return static_cast<int>(ev.size());
}

void apply_sign_convention(Eigen::MatrixXd& loadings) {
  for (Eigen::Index c = 0; c < loadings.cols(); ++c) {
    Eigen::Index arg = 0;
    loadings.col(c).cwiseAbs().maxCoeff(&arg);
    if (loadings(arg, c) < 0.0) loadings.col(c) *= -1.0;
  }
}

PcaResult truncated_pca(const Eigen::MatrixXd& data, double threshold, PcaMethod method) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("variance threshold must lie in (0, 1]");
  if (data.size() == 0) throw NumericalError("rank-0 data block (empty)");

  const Eigen::Index t = data.rows(), n = data.cols();
  if (method == PcaMethod::Auto) method = n <= 4 * t ? PcaMethod::Svd : PcaMethod::Gram;

  PcaResult out;
  out.threshold = threshold;
  Eigen::VectorXd sing;
  if (method == PcaMethod::Svd) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(data, Eigen::ComputeThinV);
    sing = svd.singularValues();
    const double tol = sing.size() ? sing[0] * rank_tolerance(t, n) : 0.0;
    Eigen::Index rank = 0;
    while (rank < sing.size() && sing[rank] > tol) ++rank;
    if (rank == 0) throw NumericalError("rank-0 data block");
    out.eigenvalues = sing.head(rank).cwiseAbs2();
    out.retained = cutoff_for_fraction(out.eigenvalues, threshold);
    out.loadings = svd.matrixV().leftCols(out.retained);
  } else {
    const Eigen::MatrixXd gram = data * data.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) throw NumericalError("Gram eigen-decomposition failed");
    // Ascending -> descending.
    const Eigen::VectorXd lam = eig.eigenvalues().reverse();
    const Eigen::MatrixXd u = eig.eigenvectors().rowwise().reverse();
    const double lmax = std::max(lam.size() ? lam[0] : 0.0, 0.0);
    const double tol = lmax * static_cast<double>(t) * std::numeric_limits<double>::epsilon() * 1e3;
    Eigen::Index rank = 0;
    while (rank < lam.size() && lam[rank] > tol) ++rank;
    if (rank == 0 || lmax <= 0.0) throw NumericalError("rank-0 data block");
    out.eigenvalues = lam.head(rank);
    out.retained = cutoff_for_fraction(out.eigenvalues, threshold);
    const Eigen::VectorXd inv_s = out.eigenvalues.head(out.retained).cwiseSqrt().cwiseInverse();
    out.loadings = (data.transpose() * u.leftCols(out.retained)) * inv_s.asDiagonal();
  }
  apply_sign_convention(out.loadings);
  return out;
}

}  // namespace hybasis
