#include "hybasis/spatial_basis.hpp"

#include <algorithm>
#include <cctype>
#include <exception>
#include <numeric>

#include "hybasis/errors.hpp"

namespace hybasis {
namespace {

std::vector<std::size_t> mask_voxels(const Volume4D& vol) {
  std::vector<std::size_t> out;
  out.reserve(vol.n_voxels());
  for (std::size_t v = 0; v < vol.n_voxels(); ++v)
    if (vol.in_mask(v)) out.push_back(v);
  return out;
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& values, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(values.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = values.col(static_cast<Eigen::Index>(cols[j]));
  return out;
}

void center_columns(Eigen::MatrixXd& m) { m.rowwise() -= m.colwise().mean(); }

}  // namespace

BasisMode parse_basis_mode(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (n == "CHSB" || n == "CHBM") return BasisMode::CHSB;
  if (n == "LSB") return BasisMode::LSB;
  if (n == "GSB") return BasisMode::GSB;
  if (n == "NSB" || n == "NBM") return BasisMode::NSB;
  throw ConfigError("unknown basis mode '" + name + "' (expected CHSB, LSB, GSB or NSB)");
}

std::string to_string(BasisMode m) {
  switch (m) {
    case BasisMode::CHSB: return "CHSB";
    case BasisMode::LSB: return "LSB";
    case BasisMode::GSB: return "GSB";
    case BasisMode::NSB: return "NSB";
  }
  return "CHSB";
}

int LocalBasis::total_components() const {
  int s = 0;
  for (const auto& l : loadings) s += static_cast<int>(l.cols());
  return s;
}

int LocalBasis::offset(std::size_t k) const {
  int s = 0;
  for (std::size_t i = 0; i < k; ++i) s += static_cast<int>(loadings[i].cols());
  return s;
}

LocalBasis fit_local_basis(const Volume4D& vol, const Parcellation& parc, double threshold, bool center,
                           PcaMethod method) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("local variance threshold must lie in (0, 1]");
  if (parc.n_rois() == 0) throw ConfigError("parcellation has no ROIs");
  if (!(vol.dims() == parc.dims())) throw ConfigError("volume and parcellation grids differ");

  const auto k_count = parc.n_rois();
  LocalBasis out;
  out.threshold = threshold;
  out.roi_ids = parc.roi_ids();
  out.voxels.resize(k_count);
  out.loadings.resize(k_count);
  out.eigenvalues.resize(k_count);

  std::vector<std::exception_ptr> errors(k_count);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(k_count); ++k) {
    const auto ku = static_cast<std::size_t>(k);
    try {
      const auto roi = out.roi_ids[ku];
      out.voxels[ku] = parc.voxels_of(roi);
      if (out.voxels[ku].empty()) throw ConfigError("ROI " + std::to_string(roi) + " is empty");
      Eigen::MatrixXd block = gather_columns(vol.values(), out.voxels[ku]);
      if (center) center_columns(block);
      PcaResult pca;
      try {
        pca = truncated_pca(block, threshold, method);
      } catch (const NumericalError&) {
        throw NumericalError("ROI " + std::to_string(roi) + " has rank 0 (constant data); cannot fit local basis");
      }
      out.loadings[ku] = std::move(pca.loadings);
      out.eigenvalues[ku] = std::move(pca.eigenvalues);
    } catch (...) {
      errors[ku] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

GlobalBasis fit_global_basis(const Eigen::MatrixXd& scores, double threshold, PcaMethod method) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("global variance threshold must lie in (0, 1]");
  PcaResult pca;
  try {
    pca = truncated_pca(scores, threshold, method);
  } catch (const NumericalError&) {
    throw NumericalError("local score matrix has rank 0; cannot fit global basis");
  }
  GlobalBasis g;
  g.threshold = threshold;
  g.loadings = std::move(pca.loadings);
  g.eigenvalues = std::move(pca.eigenvalues);
  return g;
}

Eigen::MatrixXd local_scores(const Eigen::MatrixXd& values, const LocalBasis& local) {
  Eigen::MatrixXd out(values.rows(), local.total_components());
  int off = 0;
  for (std::size_t k = 0; k < local.n_rois(); ++k) {
    const auto& phi = local.loadings[k];
    const auto& vox = local.voxels[k];
    auto block = out.middleCols(off, phi.cols());
    block.setZero();
    for (std::size_t j = 0; j < vox.size(); ++j)
      block.noalias() += values.col(static_cast<Eigen::Index>(vox[j])) * phi.row(static_cast<Eigen::Index>(j));
    off += static_cast<int>(phi.cols());
  }
  return out;
}

CompositeBasis::CompositeBasis(BasisMode mode, Dims dims, std::optional<LocalBasis> local,
                               std::optional<GlobalBasis> global, std::vector<std::size_t> analysed)
    : mode_(mode), dims_(dims), local_(std::move(local)), global_(std::move(global)), analysed_(std::move(analysed)) {
  const bool needs_local = mode_ == BasisMode::CHSB || mode_ == BasisMode::LSB;
  const bool needs_global = mode_ == BasisMode::CHSB || mode_ == BasisMode::GSB;
  if (needs_local != local_.has_value()) throw ConfigError("basis mode " + to_string(mode_) + ": local basis mismatch");
  if (needs_global != global_.has_value())
    throw ConfigError("basis mode " + to_string(mode_) + ": global basis mismatch");
  if (mode_ == BasisMode::CHSB && global_->loadings.rows() != local_->total_components())
    throw ConfigError("global loadings do not match local component count");
  if (mode_ == BasisMode::GSB && global_->loadings.rows() != static_cast<Eigen::Index>(analysed_.size()))
    throw ConfigError("global loadings do not match analysed voxel count");
  if (local_) {
    analysed_.clear();
    for (const auto& v : local_->voxels) analysed_.insert(analysed_.end(), v.begin(), v.end());
    std::sort(analysed_.begin(), analysed_.end());
  }
}

int CompositeBasis::n_components() const {
  switch (mode_) {
    case BasisMode::CHSB:
    case BasisMode::GSB: return global_->retained();
    case BasisMode::LSB: return local_->total_components();
    case BasisMode::NSB: return static_cast<int>(analysed_.size());
  }
  return 0;
}

std::vector<bool> CompositeBasis::analysed_mask() const {
  std::vector<bool> m(n_voxels(), false);
  for (auto v : analysed_) m[v] = true;
  return m;
}

Eigen::MatrixXd CompositeBasis::project(const Eigen::MatrixXd& values) const {
  if (static_cast<std::size_t>(values.cols()) != n_voxels())
    throw ConfigError("project: column count does not match the basis grid");
  switch (mode_) {
    case BasisMode::CHSB: return local_scores(values, *local_) * global_->loadings;
    case BasisMode::LSB: return local_scores(values, *local_);
    case BasisMode::GSB: return gather_columns(values, analysed_) * global_->loadings;
    case BasisMode::NSB: return gather_columns(values, analysed_);
  }
  return {};
}

Eigen::MatrixXd CompositeBasis::back_project(const Eigen::MatrixXd& coeffs) const {
  if (coeffs.cols() != n_components()) throw ConfigError("back_project: coefficient width does not match basis");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(coeffs.rows(), static_cast<Eigen::Index>(n_voxels()));
  auto scatter = [&](const Eigen::MatrixXd& cols_in_order, const std::vector<std::size_t>& voxels) {
    for (std::size_t j = 0; j < voxels.size(); ++j)
      out.col(static_cast<Eigen::Index>(voxels[j])) = cols_in_order.col(static_cast<Eigen::Index>(j));
  };
  auto local_back = [&](const Eigen::MatrixXd& zl) {
    for (std::size_t k = 0; k < local_->n_rois(); ++k) {
      const auto& phi = local_->loadings[k];
      const Eigen::MatrixXd block = zl.middleCols(local_->offset(k), phi.cols()) * phi.transpose();
      scatter(block, local_->voxels[k]);
    }
  };
  switch (mode_) {
    case BasisMode::CHSB: local_back(coeffs * global_->loadings.transpose()); break;
    case BasisMode::LSB: local_back(coeffs); break;
    case BasisMode::GSB: scatter(coeffs * global_->loadings.transpose(), analysed_); break;
    case BasisMode::NSB: scatter(coeffs, analysed_); break;
  }
  return out;
}

Eigen::MatrixXd CompositeBasis::materialize() const {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n_components(), n_components());
  return back_project(id).transpose();
}

CompositeBasis fit_basis(const Volume4D& vol, const Parcellation* parc, BasisMode mode, const BasisOptions& opts) {
  switch (mode) {
    case BasisMode::CHSB:
    case BasisMode::LSB: {
      if (!parc) throw ConfigError(to_string(mode) + " requires a parcellation");
      auto local = fit_local_basis(vol, *parc, opts.local_threshold, opts.center, opts.method);
      if (mode == BasisMode::LSB) return CompositeBasis(mode, vol.dims(), std::move(local), std::nullopt, {});
      Eigen::MatrixXd values = vol.values();
      if (opts.center) center_columns(values);
      auto global = fit_global_basis(local_scores(values, local), opts.global_threshold, opts.method);
      return CompositeBasis(mode, vol.dims(), std::move(local), std::move(global), {});
    }
    case BasisMode::GSB: {
      auto vox = mask_voxels(vol);
      Eigen::MatrixXd block = gather_columns(vol.values(), vox);
      if (opts.center) center_columns(block);
      PcaResult pca;
      try {
        pca = truncated_pca(block, opts.global_threshold, opts.method);
      } catch (const NumericalError&) {
        throw NumericalError("volume has rank 0; cannot fit global spatial basis");
      }
      GlobalBasis g;
      g.threshold = opts.global_threshold;
      g.loadings = std::move(pca.loadings);
      g.eigenvalues = std::move(pca.eigenvalues);
      return CompositeBasis(mode, vol.dims(), std::nullopt, std::move(g), std::move(vox));
    }
    case BasisMode::NSB: return CompositeBasis(mode, vol.dims(), std::nullopt, std::nullopt, mask_voxels(vol));
  }
  throw ConfigError("unknown basis mode");
}

}  // namespace hybasis
