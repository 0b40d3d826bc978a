#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace hybasis {

/// Voxel grid extent. Linear voxel index is x-fastest:
/// idx = x + X * (y + Y * z).
struct Dims {
  int x = 0;
  int y = 0;
  int z = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(x) * static_cast<std::size_t>(y) *
           static_cast<std::size_t>(z);
  }
  bool valid() const { return x > 0 && y > 0 && z > 0; }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(x) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(y) * static_cast<std::size_t>(k));
  }
  std::array<int, 3> coords(std::size_t idx) const {
    const auto xs = static_cast<std::size_t>(x), ys = static_cast<std::size_t>(y);
    return {static_cast<int>(idx % xs), static_cast<int>((idx / xs) % ys),
            static_cast<int>(idx / (xs * ys))};
  }
  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < x && j < y && k < z;
  }
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// T x Nv BOLD matrix on a voxel grid, with an optional analysis mask.
class Volume4D {
 public:
  Volume4D() = default;
  Volume4D(Dims dims, Eigen::MatrixXd values, std::optional<std::vector<bool>> mask = std::nullopt);

  static Volume4D zeros(Dims dims, int n_time);

  const Dims& dims() const { return dims_; }
  int n_time() const { return static_cast<int>(values_.rows()); }
  std::size_t n_voxels() const { return dims_.count(); }

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }

  const std::optional<std::vector<bool>>& mask() const { return mask_; }
  bool in_mask(std::size_t voxel) const { return !mask_ || (*mask_)[voxel]; }

  /// Throws ValidationError on NaN/Inf or shape mismatch.
  void validate() const;

 private:
  Dims dims_{};
  Eigen::MatrixXd values_;
  std::optional<std::vector<bool>> mask_;
};

/// Integer ROI labels per voxel; 0 means "not assigned to any ROI".
class Parcellation {
 public:
  static constexpr std::size_t kDefaultMinRoiSize = 125;

  Parcellation() = default;

  /// ROIs smaller than `min_roi_size` are relabelled to 0 (with a warning).
  /// Negative labels are rejected.
  Parcellation(Dims dims, std::vector<std::int32_t> labels,
               std::size_t min_roi_size = kDefaultMinRoiSize);

  const Dims& dims() const { return dims_; }
  const std::vector<std::int32_t>& labels() const { return labels_; }
  const std::vector<std::int32_t>& roi_ids() const { return roi_ids_; }
  std::size_t n_rois() const { return roi_ids_.size(); }

  /// Position of `roi` in roi_ids(); throws LookupError if absent.
  std::size_t roi_position(std::int32_t roi) const;
  bool has_roi(std::int32_t roi) const;

  std::size_t size_of(std::int32_t roi) const { return voxels_of(roi).size(); }
  /// Ascending linear indices of voxels labelled `roi`.
  const std::vector<std::size_t>& voxels_of(std::int32_t roi) const;
  std::size_t n_assigned() const;

  /// Drops voxels outside `mask` (sets them to 0). Warns when voxels are lost.
  Parcellation intersected(const std::vector<bool>& mask, std::size_t min_roi_size) const;

 private:
  Dims dims_{};
  std::vector<std::int32_t> labels_;
  std::vector<std::int32_t> roi_ids_;
  std::vector<std::vector<std::size_t>> members_;
};

/// T x n_k block of `vol` for ROI `roi`, columns in ascending voxel order.
Eigen::MatrixXd extract_roi(const Volume4D& vol, const Parcellation& parc, std::int32_t roi);

/// Reconciles a volume mask with a parcellation grid: voxels outside the mask
/// are unassigned, with a warning. Dims must agree.
Parcellation reconcile_mask(const Volume4D& vol, const Parcellation& parc,
                            std::size_t min_roi_size);

}  // namespace hybasis
