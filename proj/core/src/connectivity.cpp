#include "hybasis/connectivity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hybasis/errors.hpp"
#include "hybasis/io.hpp"

namespace hybasis {

ModeEstimator parse_mode_estimator(const std::string& name) {
  if (name == "histogram" || name == "mode") return ModeEstimator::Histogram;
  if (name == "median") return ModeEstimator::Median;
  throw ConfigError("unknown mode estimator '" + name + "' (expected histogram or median)");
}

namespace {

double quantile_sorted(const std::vector<double>& s, double p) {
  const double pos = p * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace

double mode_estimate(std::span<const double> values, ModeEstimator method) {
  if (values.empty()) throw ConfigError("mode of an empty set");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  const double median = quantile_sorted(s, 0.5);
  if (method == ModeEstimator::Median) return median;

  const double lo = s.front(), hi = s.back();
  const double scale = std::max(std::abs(lo), std::abs(hi));
  const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
  const double h = 2.0 * iqr / std::cbrt(static_cast<double>(s.size()));
  if (!(hi - lo > 1e-12 * scale) || !(h > 1e-12 * scale)) return median;

  const auto n_bins = static_cast<std::size_t>(std::clamp(std::ceil((hi - lo) / h), 1.0, 1e5));
  const double width = (hi - lo) / static_cast<double>(n_bins);
  std::vector<std::size_t> counts(n_bins, 0);
  for (double v : s) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    ++counts[std::min(b, n_bins - 1)];
  }
  const auto best = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  return lo + (static_cast<double>(best) + 0.5) * width;
}

Eigen::VectorXd time_domain_variance(const Eigen::MatrixXd& a, double psi, double alpha) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(a.cols());
  for (Eigen::Index m = 0; m < a.rows(); ++m)
    out += psi * std::exp2(-alpha * static_cast<double>(std::max<Eigen::Index>(1, m))) * a.row(m).transpose();
  return out;
}

RoiCovariance induced_roi_covariance(const Eigen::VectorXd& psi, const Eigen::VectorXd& alpha, const WaveletPlan& plan,
                                     const CompositeBasis& basis, ModeEstimator mode) {
  if (!basis.local()) throw ConfigError("background connectivity needs a local (ROI) basis; mode " + to_string(basis.mode()) + " has none");
  if (psi.size() != basis.n_components() || alpha.size() != basis.n_components())
    throw ConfigError("psi/alpha length does not match the number of basis series");
  const auto& local = *basis.local();

  RoiCovariance out;
  out.roi_ids = local.roi_ids;
  for (std::size_t k = 0; k < local.n_rois(); ++k) {
    out.offsets.push_back(local.offset(k));
    out.sizes.push_back(local.retained(static_cast<std::size_t>(k)));
    out.voxel_counts.push_back(local.voxels[k].size());
  }

  const Eigen::MatrixXd a = plan.squared_row_weights();
  const auto s_count = basis.n_components();
  out.theta.resize(s_count);
#pragma omp parallel for schedule(static)
  for (int s = 0; s < s_count; ++s) {
    const Eigen::VectorXd d = time_domain_variance(a, psi[s], alpha[s]);
    out.theta[s] = mode_estimate(std::span<const double>(d.data(), static_cast<std::size_t>(plan.n_time())), mode);
  }

  if (basis.global()) {
    const auto& g = basis.global()->loadings;
    out.sigma = g * out.theta.asDiagonal() * g.transpose();
    out.sigma = 0.5 * (out.sigma + out.sigma.transpose()).eval();
  } else {
    warn("no global basis: inter-ROI background connectivity is not estimable, Sigma_ROI is diagonal");
    out.sigma = out.theta.asDiagonal();
  }
  return out;
}

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  const Eigen::VectorXd& l = eig.eigenvalues();
  const double floor = 1e-10 * std::max(l.maxCoeff(), 0.0);
  Eigen::VectorXd inv(l.size());
  for (Eigen::Index i = 0; i < l.size(); ++i) inv[i] = l[i] > floor && l[i] > 0.0 ? 1.0 / std::sqrt(l[i]) : 0.0;
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

double sqrt_rv(const Eigen::MatrixXd& s_jj, const Eigen::MatrixXd& s_jk, const Eigen::MatrixXd& s_kk, double denom) {
  const Eigen::MatrixXd m = inverse_sqrt(s_jj) * s_jk * inverse_sqrt(s_kk);
  const double rv = m.squaredNorm() / denom;
  return std::sqrt(std::max(0.0, rv));
}

namespace {

Eigen::MatrixXd regularised_block(const Eigen::MatrixXd& b, std::int32_t roi) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  if (!(lmax > 0.0)) throw NumericalError("covariance block of ROI " + std::to_string(roi) + " is zero or not finite");
  if (lmin > 1e-10 * lmax) return b;
  const double ridge = 1e-8 * lmax;
  warn("ROI " + std::to_string(roi) + ": covariance block not positive definite, adding ridge");
  Eigen::MatrixXd r = b;
  r.diagonal().array() += ridge;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> again(r, Eigen::EigenvaluesOnly);
  if (!(again.eigenvalues().minCoeff() > 0.0))
    throw NumericalError("covariance block of ROI " + std::to_string(roi) + " is not positive semidefinite");
  return r;
}

}  // namespace

ConnectivityMatrix rv_connectivity(const RoiCovariance& cov, RvDenominator denom) {
  const auto k = cov.roi_ids.size();
  ConnectivityMatrix out;
  out.roi_ids = cov.roi_ids;
  out.values = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));

  std::vector<Eigen::MatrixXd> inv_sqrt(k);
  for (std::size_t j = 0; j < k; ++j) inv_sqrt[j] = inverse_sqrt(regularised_block(cov.block(j, j), cov.roi_ids[j]));

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t l = j + 1; l < k; ++l) pairs.emplace_back(j, l);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(pairs.size()); ++i) {
    const auto [j, l] = pairs[static_cast<std::size_t>(i)];
    const double d = denom == RvDenominator::Components
                         ? std::sqrt(static_cast<double>(cov.sizes[j]) * cov.sizes[l])
                         : std::sqrt(static_cast<double>(cov.voxel_counts[j]) * static_cast<double>(cov.voxel_counts[l]));
    const Eigen::MatrixXd m = inv_sqrt[j] * cov.block(j, l) * inv_sqrt[l];
    const double v = std::sqrt(std::max(0.0, m.squaredNorm() / d));
    out.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) = v;
    out.values(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j)) = v;
  }
  if (denom == RvDenominator::Voxels)
    for (std::size_t j = 0; j < k; ++j)
      out.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) =
          std::sqrt(static_cast<double>(cov.sizes[j]) / static_cast<double>(cov.voxel_counts[j]));
  return out;
}

std::vector<Edge> top_pairs(const ConnectivityMatrix& conn, std::size_t n) {
  std::vector<Edge> all;
  const auto k = conn.roi_ids.size();
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t l = j + 1; l < k; ++l)
      all.push_back({conn.roi_ids[j], conn.roi_ids[l], conn.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l))});
  std::stable_sort(all.begin(), all.end(), [](const Edge& a, const Edge& b) { return a.value > b.value; });
  if (all.size() > n) all.resize(n);
  return all;
}

StrongPairs select_strong_pairs(const ConnectivityMatrix& conn, double threshold) {
  StrongPairs out;
  for (const auto& e : top_pairs(conn, conn.roi_ids.size() * conn.roi_ids.size()))
    if (e.value > threshold) out.edges.push_back(e);
  for (const auto& e : out.edges) {
    out.rois.push_back(e.roi_a);
    out.rois.push_back(e.roi_b);
  }
  std::sort(out.rois.begin(), out.rois.end());
  out.rois.erase(std::unique(out.rois.begin(), out.rois.end()), out.rois.end());
  return out;
}

void write_connectivity_csv(const ConnectivityMatrix& conn, const std::filesystem::path& file) {
  std::ostringstream os;
  os.precision(17);
  os << "roi";
  for (auto id : conn.roi_ids) os << ',' << id;
  os << '\n';
  for (std::size_t j = 0; j < conn.roi_ids.size(); ++j) {
    os << conn.roi_ids[j];
    for (std::size_t l = 0; l < conn.roi_ids.size(); ++l)
      os << ',' << conn.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l));
    os << '\n';
  }
  write_text(file, os.str());
}

void write_connectivity_long_csv(const ConnectivityMatrix& conn, const std::filesystem::path& file) {
  std::ostringstream os;
  os.precision(17);
  os << "roi_a,roi_b,sqrt_rv\n";
  for (std::size_t j = 0; j < conn.roi_ids.size(); ++j)
    for (std::size_t l = 0; l < conn.roi_ids.size(); ++l)
      os << conn.roi_ids[j] << ',' << conn.roi_ids[l] << ','
         << conn.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) << '\n';
  write_text(file, os.str());
}

void write_edges_json(const StrongPairs& pairs, double threshold, const std::filesystem::path& file) {
  nlohmann::json j;
  j["threshold"] = threshold;
  j["rois"] = pairs.rois;
  j["edges"] = nlohmann::json::array();
  for (const auto& e : pairs.edges) j["edges"].push_back({{"roi_a", e.roi_a}, {"roi_b", e.roi_b}, {"sqrt_rv", e.value}});
  write_text(file, j.dump(2) + "\n");
}

ConnectivityMatrix read_connectivity_csv(const std::filesystem::path& file) {
  std::istringstream in(read_text(file));
  std::string line;
  ConnectivityMatrix out;
  if (!std::getline(in, line)) throw IoError("empty connectivity file " + file.string());
  {
    std::stringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    if (tok != "roi") throw IoError("connectivity file must start with 'roi' header");
    while (std::getline(ss, tok, ',')) out.roi_ids.push_back(std::stoi(tok));
  }
  const auto k = static_cast<Eigen::Index>(out.roi_ids.size());
  out.values.resize(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!std::getline(in, line)) throw IoError("connectivity file truncated: " + file.string());
    std::stringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    for (Eigen::Index l = 0; l < k; ++l) {
      if (!std::getline(ss, tok, ',')) throw IoError("connectivity row too short in " + file.string());
      out.values(j, l) = std::stod(tok);
    }
  }
  return out;
}

}  // namespace hybasis
