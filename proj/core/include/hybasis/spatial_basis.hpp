#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hybasis/pca.hpp"
#include "hybasis/volume.hpp"

namespace hybasis {

/// CHSB: per-ROI PCA composed with a PCA of the stacked local scores.
/// LSB: per-ROI PCA only. GSB: one PCA over all analysed voxels.
/// NSB: no spatial transform (each voxel its own series).
enum class BasisMode { CHSB, LSB, GSB, NSB };

BasisMode parse_basis_mode(const std::string& name);
std::string to_string(BasisMode m);

/// Block-diagonal intra-ROI loadings.
struct LocalBasis {
  std::vector<std::int32_t> roi_ids;
  std::vector<std::vector<std::size_t>> voxels;  ///< ascending voxel indices per ROI
  std::vector<Eigen::MatrixXd> loadings;         ///< n_k x p_k, orthonormal columns
  std::vector<Eigen::VectorXd> eigenvalues;      ///< all nonzero eigenvalues per ROI
  double threshold = 0.9;

  std::size_t n_rois() const { return roi_ids.size(); }
  int retained(std::size_t k) const { return static_cast<int>(loadings[k].cols()); }
  int total_components() const;
  /// Column offset of ROI k's block in the stacked local score matrix.
  int offset(std::size_t k) const;
};

struct GlobalBasis {
  Eigen::MatrixXd loadings;     ///< R x S, orthonormal columns
  Eigen::VectorXd eigenvalues;  ///< all nonzero, descending
  double threshold = 0.9;

  int retained() const { return static_cast<int>(loadings.cols()); }
};

struct BasisOptions {
  double local_threshold = 0.9;
  double global_threshold = 0.9;
  /// Subtract each voxel's temporal mean before the PCA.
  bool center = false;
  PcaMethod method = PcaMethod::Auto;
};

/// One PCA per ROI; ROIs are fitted in parallel. Throws NumericalError naming
/// the ROI when a block has rank 0.
LocalBasis fit_local_basis(const Volume4D& vol, const Parcellation& parc, double threshold,
                           bool center = false, PcaMethod method = PcaMethod::Auto);

/// PCA of the T x sum(p_k) local score matrix.
GlobalBasis fit_global_basis(const Eigen::MatrixXd& local_scores, double threshold,
                             PcaMethod method = PcaMethod::Auto);

/// Y^L = [Y^(1) Phi^(1), ..., Y^(K) Phi^(K)].
Eigen::MatrixXd local_scores(const Eigen::MatrixXd& values, const LocalBasis& local);

/// The spatial basis Upsilon in one of the four modes, with the voxel
/// bookkeeping needed to move between voxel space and basis space.
class CompositeBasis {
 public:
  CompositeBasis() = default;
  CompositeBasis(BasisMode mode, Dims dims, std::optional<LocalBasis> local, std::optional<GlobalBasis> global,
                 std::vector<std::size_t> analysed_voxels);

  BasisMode mode() const { return mode_; }
  const Dims& dims() const { return dims_; }
  std::size_t n_voxels() const { return dims_.count(); }
  /// Number of basis-space series S.
  int n_components() const;

  const std::optional<LocalBasis>& local() const { return local_; }
  const std::optional<GlobalBasis>& global() const { return global_; }
  /// Voxels carried through the analysis, ascending. Everything else is
  /// reported as "not analysed" (zero loading).
  const std::vector<std::size_t>& analysed_voxels() const { return analysed_; }
  std::vector<bool> analysed_mask() const;

  /// T x Nv voxel matrix -> T x S basis scores.
  Eigen::MatrixXd project(const Eigen::MatrixXd& values) const;
  /// R x S basis coefficients -> R x Nv voxel matrix (unanalysed voxels = 0).
  Eigen::MatrixXd back_project(const Eigen::MatrixXd& coeffs) const;

  /// Dense Nv x S matrix Upsilon. Only for small grids (tests and oracles).
  Eigen::MatrixXd materialize() const;

 private:
  BasisMode mode_ = BasisMode::CHSB;
  Dims dims_{};
  std::optional<LocalBasis> local_;
  std::optional<GlobalBasis> global_;
  std::vector<std::size_t> analysed_;
};

/// Fits the basis for `mode`. CHSB and LSB require a parcellation; GSB and
/// NSB use every voxel in the volume mask (parcellation ignored).
CompositeBasis fit_basis(const Volume4D& vol, const Parcellation* parc, BasisMode mode, const BasisOptions& opts);

/// Basis archive: <stem>.basis.json + <stem>.basis.raw (float64 blocks) +
/// <stem>.basis.idx.raw (int32 voxel indices).
void save_basis(const CompositeBasis& basis, const std::filesystem::path& stem);
CompositeBasis load_basis(const std::filesystem::path& path);

}  // namespace hybasis
