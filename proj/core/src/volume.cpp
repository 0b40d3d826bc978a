#include "hybasis/volume.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>

#include "hybasis/errors.hpp"

namespace hybasis {

Volume4D::Volume4D(Dims dims, Eigen::MatrixXd values, std::optional<std::vector<bool>> mask)
    : dims_(dims), values_(std::move(values)), mask_(std::move(mask)) {
  if (!dims_.valid()) throw ConfigError("volume dims must be positive");
  if (static_cast<std::size_t>(values_.cols()) != dims_.count()) {
    std::ostringstream os;
    os << "volume has " << values_.cols() << " columns but dims imply " << dims_.count();
    throw ValidationError(os.str());
  }
  if (mask_ && mask_->size() != dims_.count())
    throw ValidationError("mask length does not match voxel count");
}

Volume4D Volume4D::zeros(Dims dims, int n_time) {
  return Volume4D(dims, Eigen::MatrixXd::Zero(n_time, static_cast<Eigen::Index>(dims.count())));
}

void Volume4D::validate() const {
  if (!values_.allFinite()) {
    for (Eigen::Index c = 0; c < values_.cols(); ++c)
      for (Eigen::Index r = 0; r < values_.rows(); ++r)
        if (!std::isfinite(values_(r, c))) {
          std::ostringstream os;
          os << "non-finite value at frame " << r << ", voxel " << c;
          throw ValidationError(os.str());
        }
  }
}

Parcellation::Parcellation(Dims dims, std::vector<std::int32_t> labels, std::size_t min_roi_size)
    : dims_(dims), labels_(std::move(labels)) {
  if (!dims_.valid()) throw ConfigError("parcellation dims must be positive");
  if (labels_.size() != dims_.count())
    throw ValidationError("parcellation label count does not match dims");

  std::map<std::int32_t, std::vector<std::size_t>> groups;
  for (std::size_t v = 0; v < labels_.size(); ++v) {
    if (labels_[v] < 0) throw ValidationError("negative ROI label at voxel " + std::to_string(v));
    if (labels_[v] > 0) groups[labels_[v]].push_back(v);
  }
  for (auto& [id, vox] : groups) {
    if (vox.size() < min_roi_size) {
      std::ostringstream os;
      os << "ROI " << id << " has " << vox.size() << " voxels (< " << min_roi_size
         << "); treated as unassigned";
      warn(os.str());
      for (auto v : vox) labels_[v] = 0;
      continue;
    }
    roi_ids_.push_back(id);
    members_.push_back(std::move(vox));
  }
}

bool Parcellation::has_roi(std::int32_t roi) const {
  return std::binary_search(roi_ids_.begin(), roi_ids_.end(), roi);
}

std::size_t Parcellation::roi_position(std::int32_t roi) const {
  auto it = std::lower_bound(roi_ids_.begin(), roi_ids_.end(), roi);
  if (it == roi_ids_.end() || *it != roi) throw LookupError("unknown ROI id " + std::to_string(roi));
  return static_cast<std::size_t>(it - roi_ids_.begin());
}

const std::vector<std::size_t>& Parcellation::voxels_of(std::int32_t roi) const {
  return members_[roi_position(roi)];
}

std::size_t Parcellation::n_assigned() const {
  std::size_t n = 0;
  for (const auto& m : members_) n += m.size();
  return n;
}

Parcellation Parcellation::intersected(const std::vector<bool>& mask, std::size_t min_roi_size) const {
  if (mask.size() != labels_.size()) throw ValidationError("mask and parcellation sizes differ");
  auto labels = labels_;
  std::size_t dropped = 0;
  for (std::size_t v = 0; v < labels.size(); ++v)
    if (labels[v] != 0 && !mask[v]) {
      labels[v] = 0;
      ++dropped;
    }
  if (dropped > 0)
    warn("mask and parcellation disagree on " + std::to_string(dropped) +
         " voxels; using their intersection");
  return Parcellation(dims_, std::move(labels), min_roi_size);
}

Eigen::MatrixXd extract_roi(const Volume4D& vol, const Parcellation& parc, std::int32_t roi) {
  if (!(vol.dims() == parc.dims())) throw ConfigError("volume and parcellation grids differ");
  const auto& vox = parc.voxels_of(roi);
  Eigen::MatrixXd out(vol.n_time(), static_cast<Eigen::Index>(vox.size()));
  for (std::size_t j = 0; j < vox.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = vol.values().col(static_cast<Eigen::Index>(vox[j]));
  return out;
}

Parcellation reconcile_mask(const Volume4D& vol, const Parcellation& parc, std::size_t min_roi_size) {
  if (!(vol.dims() == parc.dims())) throw ConfigError("volume and parcellation grids differ");
  if (!vol.mask()) return parc;
  return parc.intersected(*vol.mask(), min_roi_size);
}

}  // namespace hybasis
