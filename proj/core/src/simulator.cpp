#include "hybasis/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "hybasis/errors.hpp"
#include "hybasis/io.hpp"
#include "hybasis/rng.hpp"

namespace hybasis {

namespace {

constexpr std::uint64_t kShortRangeTag = 1ULL << 40;
constexpr std::uint64_t kFactorTag = 2ULL << 40;
constexpr std::uint64_t kRoiTag = 3ULL << 40;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

TemporalKind parse_temporal_kind(const std::string& name) {
  const auto n = lower(name);
  if (n == "iid") return TemporalKind::Iid;
  if (n == "ar2") return TemporalKind::Ar2;
  throw ConfigError("unknown temporal kind '" + name + "' (expected iid or ar2)");
}

NoiseKind parse_noise_kind(const std::string& name) {
  const auto n = lower(name);
  if (n == "short-range" || n == "short") return NoiseKind::ShortRange;
  if (n == "long-range" || n == "long") return NoiseKind::LongRange;
  throw ConfigError("unknown noise kind '" + name + "' (expected short-range or long-range)");
}

BaselineKind parse_baseline_kind(const std::string& name) {
  const auto n = lower(name);
  if (n == "cosine") return BaselineKind::Cosine;
  if (n == "zero") return BaselineKind::Zero;
  if (n == "file") return BaselineKind::File;
  throw ConfigError("unknown baseline kind '" + name + "' (expected cosine, zero or file)");
}

std::string to_string(TemporalKind k) { return k == TemporalKind::Iid ? "iid" : "ar2"; }
std::string to_string(NoiseKind k) { return k == NoiseKind::ShortRange ? "short-range" : "long-range"; }
std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::Cosine: return "cosine";
    case BaselineKind::Zero: return "zero";
    case BaselineKind::File: return "file";
  }
  return "cosine";
}

bool Ellipsoid::contains(int i, int j, int k) const {
  const std::array<double, 3> p{static_cast<double>(i), static_cast<double>(j), static_cast<double>(k)};
  double r = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    const double d = (p[a] - center[a]) / semi_axes[a];
    r += d * d;
  }
  return r <= 1.0;
}

void SimConfig::validate() const {
  if (!dims.valid()) throw ConfigError("simulation dims must be positive");
  if (n_time < 4) throw ConfigError("simulation needs at least 4 frames");
  if (!(tr > 0.0)) throw ConfigError("TR must be positive");
  if (kappa0 < 0.0 || kappa1 < 0.0 || kappa2 < 0.0) throw ConfigError("kappa values must be non-negative");
  if (null_noise_scale < 0.0) throw ConfigError("null_noise_scale must be non-negative");
  if (n_rois < 1) throw ConfigError("n_rois must be positive");
  for (const auto& p : planted) {
    if (!(p.value > -1.0 && p.value < 1.0)) throw ConfigError("planted correlations must lie in (-1, 1)");
    if (p.roi_a < 1 || p.roi_b < 1 || p.roi_a > n_rois || p.roi_b > n_rois || p.roi_a == p.roi_b)
      throw ConfigError("planted correlation refers to invalid ROI pair");
  }
  for (const auto& e : activation) {
    if (e.condition < 0 || e.condition >= static_cast<int>(design.conditions.size()))
      throw ConfigError("activation ellipsoid refers to unknown condition");
    for (double s : e.semi_axes)
      if (!(s > 0.0)) throw ConfigError("ellipsoid semi-axes must be positive");
  }
  if (design.onsets.size() != design.conditions.size()) throw ConfigError("one onset list per condition required");
  if (short_range.burn_in < 0) throw ConfigError("AR burn-in must be non-negative");
  if (!(short_range.innovation_var > 0.0) || !(long_range.factor_var >= 0.0))
    throw ConfigError("noise variances must be positive");
  if (baseline == BaselineKind::File && !baseline_file) throw ConfigError("baseline = file needs baseline_file");
}

int stencil_size(const Dims& d, int i, int j, int k) {
  int m = 1;
  m += d.contains(i - 1, j, k) + d.contains(i + 1, j, k);
  m += d.contains(i, j - 1, k) + d.contains(i, j + 1, k);
  m += d.contains(i, j, k - 1) + d.contains(i, j, k + 1);
  return m;
}

std::array<double, 3> long_range_loadings(int v1, int v2, int v3, double amplitude) {
  constexpr double pi = std::numbers::pi;
  return {amplitude * std::sin(pi * v1 / 10.0), amplitude * std::cos(pi * v2 / 10.0),
          amplitude * std::sin(pi * v3 / 5.0)};
}

Volume4D gen_short_range(const Dims& dims, int n_time, const ShortRangeParams& p, std::uint64_t seed) {
  if (!dims.valid() || n_time < 1) throw ConfigError("gen_short_range: bad dims or length");
  const auto nv = static_cast<std::ptrdiff_t>(dims.count());
  Eigen::MatrixXd star(n_time, nv);
  const double sd = p.temporal == TemporalKind::Iid ? 1.0 : std::sqrt(p.innovation_var);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t v = 0; v < nv; ++v) {
    auto rng = substream(seed, kShortRangeTag | static_cast<std::uint64_t>(v));
    std::normal_distribution<double> normal(0.0, sd);
    if (p.temporal == TemporalKind::Iid) {
      for (int t = 0; t < n_time; ++t) star(t, v) = normal(rng);
      continue;
    }
    double e0 = 0.0, e1 = 0.0;  // E*_{t-2}, E*_{t-1}
    for (int t = -p.burn_in; t < n_time; ++t) {
      const double e = p.phi1 * e1 + p.phi2 * e0 + normal(rng);
      e0 = e1;
      e1 = e;
      if (t >= 0) star(t, v) = e;
    }
  }
  Eigen::MatrixXd out(n_time, nv);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t v = 0; v < nv; ++v) {
    const auto c = dims.coords(static_cast<std::size_t>(v));
    Eigen::VectorXd acc = star.col(v);
    int m = 1;
    static constexpr int off[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
    for (const auto& o : off) {
      const int i = c[0] + o[0], j = c[1] + o[1], k = c[2] + o[2];
      if (!dims.contains(i, j, k)) continue;
      acc += star.col(static_cast<Eigen::Index>(dims.index(i, j, k)));
      ++m;
    }
    out.col(v) = acc / m;
  }
  return Volume4D(dims, std::move(out));
}

Volume4D gen_long_range(const Dims& dims, int n_time, const LongRangeParams& lr, const ShortRangeParams& sr,
                        std::uint64_t seed) {
  Volume4D vol = gen_short_range(dims, n_time, sr, seed);
  auto rng = substream(seed, kFactorTag);
  std::normal_distribution<double> normal(0.0, std::sqrt(lr.factor_var));
  Eigen::MatrixXd f(n_time, 3);
  for (int t = 0; t < n_time; ++t)
    for (int k = 0; k < 3; ++k) f(t, k) = normal(rng);
  auto& y = vol.values();
  for (std::size_t v = 0; v < dims.count(); ++v) {
    const auto c = dims.coords(v);
    const auto l = long_range_loadings(c[0] + 1, c[1] + 1, c[2] + 1, lr.amplitude);
    y.col(static_cast<Eigen::Index>(v)) += f * Eigen::Vector3d(l[0], l[1], l[2]);
  }
  return vol;
}

Parcellation voronoi_parcellation(const Dims& dims, int n_rois, std::uint64_t seed, int lloyd_iterations,
                                  std::size_t min_size) {
  if (!dims.valid() || n_rois < 1) throw ConfigError("voronoi_parcellation: bad arguments");
  const auto nv = dims.count();
  if (static_cast<std::size_t>(n_rois) * min_size > nv)
    throw ConfigError("grid too small for the requested number of ROIs of minimum size");
  auto rng = substream(seed, 0);
  std::uniform_real_distribution<double> ux(0.0, dims.x), uy(0.0, dims.y), uz(0.0, dims.z);
  std::vector<Eigen::Vector3d> centers(static_cast<std::size_t>(n_rois));
  for (auto& c : centers) {
    const double cx = ux(rng), cy = uy(rng), cz = uz(rng);
    c = Eigen::Vector3d(cx, cy, cz);
  }
  std::vector<int> assign(nv, 0);
  auto assign_all = [&]() {
    for (std::size_t v = 0; v < nv; ++v) {
      const auto p = dims.coords(v);
      const Eigen::Vector3d x(p[0], p[1], p[2]);
      int best = 0;
      double bd = (x - centers[0]).squaredNorm();
      for (int r = 1; r < n_rois; ++r) {
        const double d = (x - centers[static_cast<std::size_t>(r)]).squaredNorm();
        if (d < bd) {
          bd = d;
          best = r;
        }
      }
      assign[v] = best;
    }
  };
  for (int it = 0; it <= lloyd_iterations; ++it) {
    assign_all();
    if (it == lloyd_iterations) break;
    std::vector<Eigen::Vector3d> sum(centers.size(), Eigen::Vector3d::Zero());
    std::vector<std::size_t> cnt(centers.size(), 0);
    for (std::size_t v = 0; v < nv; ++v) {
      const auto p = dims.coords(v);
      sum[static_cast<std::size_t>(assign[v])] += Eigen::Vector3d(p[0], p[1], p[2]);
      ++cnt[static_cast<std::size_t>(assign[v])];
    }
    for (std::size_t r = 0; r < centers.size(); ++r)
      if (cnt[r] > 0) centers[r] = sum[r] / static_cast<double>(cnt[r]);
  }
  // Stable labels: order regions by centroid (z, y, x).
  std::vector<int> order(static_cast<std::size_t>(n_rois));
  for (int r = 0; r < n_rois; ++r) order[static_cast<std::size_t>(r)] = r;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ca = centers[static_cast<std::size_t>(a)];
    const auto& cb = centers[static_cast<std::size_t>(b)];
    if (ca.z() != cb.z()) return ca.z() < cb.z();
    if (ca.y() != cb.y()) return ca.y() < cb.y();
    if (ca.x() != cb.x()) return ca.x() < cb.x();
    return a < b;
  });
  std::vector<std::int32_t> label_of(static_cast<std::size_t>(n_rois));
  for (std::size_t i = 0; i < order.size(); ++i) label_of[static_cast<std::size_t>(order[i])] = static_cast<std::int32_t>(i + 1);
  std::vector<std::int32_t> labels(nv);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(n_rois), 0);
  for (std::size_t v = 0; v < nv; ++v) {
    labels[v] = label_of[static_cast<std::size_t>(assign[v])];
    ++sizes[static_cast<std::size_t>(labels[v] - 1)];
  }
  for (std::size_t r = 0; r < sizes.size(); ++r)
    if (sizes[r] < min_size) {
      std::ostringstream os;
      os << "Voronoi region " << r + 1 << " has " << sizes[r] << " voxels (< " << min_size
         << "); choose another parcellation seed or fewer ROIs";
      throw ConfigError(os.str());
    }
  return Parcellation(dims, std::move(labels), min_size);
}

Eigen::MatrixXd planted_roi_covariance(int n_rois, const std::vector<PlantedCorrelation>& planted) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n_rois, n_rois);
  for (const auto& p : planted) {
    if (p.roi_a < 1 || p.roi_b < 1 || p.roi_a > n_rois || p.roi_b > n_rois)
      throw ConfigError("planted correlation outside 1.." + std::to_string(n_rois));
    s(p.roi_a - 1, p.roi_b - 1) = p.value;
    s(p.roi_b - 1, p.roi_a - 1) = p.value;
  }
  if (s.llt().info() == Eigen::Success) return s;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  const Eigen::VectorXd l = eig.eigenvalues().cwiseMax(1e-6);
  Eigen::MatrixXd near = eig.eigenvectors() * l.asDiagonal() * eig.eigenvectors().transpose();
  const Eigen::VectorXd d = near.diagonal().cwiseSqrt().cwiseInverse();
  near = d.asDiagonal() * near * d.asDiagonal();
  std::ostringstream os;
  os.precision(4);
  os << "planted Sigma_roi is not positive definite (smallest eigenvalue " << eig.eigenvalues().minCoeff()
     << "); nearest PSD correlation suggests:";
  for (const auto& p : planted) os << " (" << p.roi_a << "," << p.roi_b << ")=" << near(p.roi_a - 1, p.roi_b - 1);
  throw ConfigError(os.str());
}

StimulusSchedule block_schedule(const BlockDesign& design, double tr, int n_time) {
  StimulusSchedule s;
  s.tr = tr;
  s.conditions = design.conditions;
  for (std::size_t c = 0; c < design.conditions.size(); ++c)
    for (int onset : design.onsets.at(c))
      s.events.push_back({design.conditions[c], onset * tr, design.block_frames * tr});
  s.validate(n_time);
  return s;
}

Eigen::MatrixXd ellipsoid_coefficients(const Dims& dims, const std::vector<Ellipsoid>& shapes, int n_conditions) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dims.count()), n_conditions);
  for (const auto& e : shapes) {
    if (e.condition < 0 || e.condition >= n_conditions) throw ConfigError("ellipsoid condition out of range");
    for (std::size_t v = 0; v < dims.count(); ++v) {
      const auto c = dims.coords(v);
      if (e.contains(c[0], c[1], c[2])) b(static_cast<Eigen::Index>(v), e.condition) += e.amplitude;
    }
  }
  return b;
}

Eigen::VectorXd synthetic_baseline(const Dims& dims, double amplitude) {
  constexpr double pi = std::numbers::pi;
  Eigen::VectorXd out(static_cast<Eigen::Index>(dims.count()));
  for (std::size_t v = 0; v < dims.count(); ++v) {
    const auto c = dims.coords(v);
    const double s = std::cos(2.0 * pi * (c[0] + 0.5) / dims.x) + std::cos(2.0 * pi * (c[1] + 0.5) / dims.y) +
                     std::cos(2.0 * pi * (c[2] + 0.5) / dims.z);
    out[static_cast<Eigen::Index>(v)] = amplitude * (1.0 + 0.1 * s);
  }
  return out;
}

Eigen::MatrixXd roi_factors(const Eigen::MatrixXd& sigma_roi, int n_time, std::uint64_t seed) {
  const Eigen::LLT<Eigen::MatrixXd> llt(sigma_roi);
  if (llt.info() != Eigen::Success) throw ConfigError("Sigma_roi is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  auto rng = substream(seed, kRoiTag);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(n_time, sigma_roi.rows());
  for (int t = 0; t < n_time; ++t)
    for (Eigen::Index k = 0; k < z.cols(); ++k) z(t, k) = normal(rng);
  return z * l.transpose();
}

namespace {

Eigen::VectorXd load_baseline(const SimConfig& cfg) {
  switch (cfg.baseline) {
    case BaselineKind::Zero: return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg.dims.count()));
    case BaselineKind::Cosine: return synthetic_baseline(cfg.dims, cfg.baseline_amplitude);
    case BaselineKind::File: {
      const auto vol = load_volume(*cfg.baseline_file);
      if (!(vol.dims() == cfg.dims)) throw ConfigError("baseline volume grid does not match simulation dims");
      return vol.values().colwise().mean().transpose();
    }
  }
  return {};
}

Eigen::MatrixXd noise_field(const SimConfig& cfg) {
  if (cfg.noise == NoiseKind::ShortRange)
    return gen_short_range(cfg.dims, cfg.n_time, cfg.short_range, cfg.seed).values();
  return gen_long_range(cfg.dims, cfg.n_time, cfg.long_range, cfg.short_range, cfg.seed).values();
}

SimDataset scaffold(const SimConfig& cfg) {
  cfg.validate();
  SimDataset ds;
  ds.parcellation = voronoi_parcellation(cfg.dims, cfg.n_rois, cfg.parcellation_seed, cfg.lloyd_iterations,
                                         cfg.min_roi_size);
  ds.schedule = block_schedule(cfg.design, cfg.tr, cfg.n_time);
  ds.design = build_design(ds.schedule, cfg.n_time);
  ds.baseline = load_baseline(cfg);
  return ds;
}

}  // namespace

Volume4D gen_activation_dataset(const SimConfig& cfg, const Parcellation& parc, const Eigen::MatrixXd& b_true,
                                const Eigen::MatrixXd& design, const Eigen::VectorXd& baseline,
                                const Eigen::MatrixXd& sigma_roi) {
  const auto nv = static_cast<Eigen::Index>(cfg.dims.count());
  if (!(parc.dims() == cfg.dims) || b_true.rows() != nv || baseline.size() != nv || design.rows() != cfg.n_time ||
      design.cols() != b_true.cols())
    throw ConfigError("activation dataset inputs have inconsistent shapes");
  if (sigma_roi.rows() != static_cast<Eigen::Index>(parc.n_rois()))
    throw ConfigError("Sigma_roi size does not match the number of ROIs");

  Eigen::MatrixXd y = baseline.transpose().replicate(cfg.n_time, 1);
  if (cfg.kappa0 != 0.0) y.noalias() += cfg.kappa0 * design * b_true.transpose();
  if (cfg.kappa1 != 0.0) {
    const Eigen::MatrixXd e = roi_factors(sigma_roi, cfg.n_time, cfg.seed);
    for (std::size_t r = 0; r < parc.n_rois(); ++r)
      for (auto v : parc.voxels_of(parc.roi_ids()[r]))
        y.col(static_cast<Eigen::Index>(v)) += cfg.kappa1 * e.col(static_cast<Eigen::Index>(r));
  }
  if (cfg.kappa2 != 0.0) y += cfg.kappa2 * noise_field(cfg);
  return Volume4D(cfg.dims, std::move(y));
}

SimDataset gen_activation_dataset(const SimConfig& cfg) {
  SimDataset ds = scaffold(cfg);
  const int p = static_cast<int>(cfg.design.conditions.size());
  ds.truth.b_true = ellipsoid_coefficients(cfg.dims, cfg.activation, p);
  ds.truth.contrast = p >= 2 ? Eigen::VectorXd(ds.truth.b_true.col(0) - ds.truth.b_true.col(1))
                             : Eigen::VectorXd(ds.truth.b_true.col(0));
  ds.truth.sigma_roi = planted_roi_covariance(static_cast<int>(ds.parcellation.n_rois()), cfg.planted);
  ds.truth.planted = cfg.planted;
  ds.volume = gen_activation_dataset(cfg, ds.parcellation, ds.truth.b_true, ds.design.values, ds.baseline,
                                     ds.truth.sigma_roi);
  return ds;
}

SimDataset gen_null_dataset(const SimConfig& cfg) {
  SimDataset ds = scaffold(cfg);
  const auto nv = static_cast<Eigen::Index>(cfg.dims.count());
  const int p = static_cast<int>(cfg.design.conditions.size());
  ds.truth.b_true = Eigen::MatrixXd::Zero(nv, p);
  ds.truth.contrast = Eigen::VectorXd::Zero(nv);
  ds.truth.sigma_roi = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(ds.parcellation.n_rois()),
                                                 static_cast<Eigen::Index>(ds.parcellation.n_rois()));
  Eigen::MatrixXd y = ds.baseline.transpose().replicate(cfg.n_time, 1);
  if (cfg.null_noise_scale != 0.0) y += cfg.null_noise_scale * noise_field(cfg);
  ds.volume = Volume4D(cfg.dims, std::move(y));
  return ds;
}

void save_truth(const SimTruth& truth, const Dims& dims, const std::filesystem::path& path) {
  const auto stem = strip_suffix(path, ".truth.json");
  nlohmann::json h;
  h["format"] = "hybasis-truth";
  h["version"] = 1;
  h["dims"] = {dims.x, dims.y, dims.z};
  h["n_conditions"] = truth.b_true.cols();
  h["n_rois"] = truth.sigma_roi.rows();
  h["dtype"] = "float64";
  h["endianness"] = "little";
  h["layout"] = {"b_true[condition][voxel]", "contrast[voxel]", "sigma_roi[row][col]"};
  h["payload"] = stem.filename().string() + ".truth.raw";
  h["planted"] = nlohmann::json::array();
  for (const auto& p : truth.planted) h["planted"].push_back({{"roi_a", p.roi_a}, {"roi_b", p.roi_b}, {"value", p.value}});
  std::vector<double> payload(truth.b_true.data(), truth.b_true.data() + truth.b_true.size());
  payload.insert(payload.end(), truth.contrast.data(), truth.contrast.data() + truth.contrast.size());
  payload.insert(payload.end(), truth.sigma_roi.data(), truth.sigma_roi.data() + truth.sigma_roi.size());
  write_text(stem.string() + ".truth.json", h.dump(2) + "\n");
  raw::write_f64(stem.string() + ".truth.raw", payload);
}

SimTruth load_truth(const std::filesystem::path& path) {
  const auto stem = strip_suffix(path, ".truth.json");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(read_text(stem.string() + ".truth.json"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed truth header: " + std::string(e.what()));
  }
  SimTruth t;
  try {
    const auto d = h.at("dims").get<std::vector<int>>();
    const auto nv = static_cast<Eigen::Index>(d.at(0)) * d.at(1) * d.at(2);
    const auto p = h.at("n_conditions").get<Eigen::Index>();
    const auto k = h.at("n_rois").get<Eigen::Index>();
    const auto payload =
        raw::read_f64(stem.string() + ".truth.raw", static_cast<std::size_t>(nv * p + nv + k * k));
    t.b_true = Eigen::Map<const Eigen::MatrixXd>(payload.data(), nv, p);
    t.contrast = Eigen::Map<const Eigen::VectorXd>(payload.data() + nv * p, nv);
    t.sigma_roi = Eigen::Map<const Eigen::MatrixXd>(payload.data() + nv * p + nv, k, k);
    for (const auto& e : h.at("planted"))
      t.planted.push_back({e.at("roi_a").get<int>(), e.at("roi_b").get<int>(), e.at("value").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad truth header field: " + std::string(e.what()));
  }
  return t;
}

}  // namespace hybasis
