#include "hybasis/simbas.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hybasis/errors.hpp"

namespace hybasis {

void ContrastSpec::validate(int n_predictors) const {
  if (weights.size() != n_predictors) {
    std::ostringstream os;
    os << "contrast '" << name << "' has " << weights.size() << " weights but the design has " << n_predictors
       << " columns";
    throw ConfigError(os.str());
  }
  if (!(weights.array().abs().maxCoeff() > 0.0)) throw ConfigError("contrast '" + name + "' has no nonzero weight");
  if (!weights.allFinite()) throw ConfigError("contrast '" + name + "' has non-finite weights");
}

ContrastSpec ContrastSpec::preset(const std::string& name, int p, bool with_derivative) {
  ContrastSpec c;
  c.name = name;
  c.weights = Eigen::VectorXd::Zero(p);
  if (name == "faces-vs-places") {
    if (p < 13) throw ConfigError("faces-vs-places needs at least 13 design columns");
    c.weights[2] = 0.5;
    c.weights[10] = 0.5;
    c.weights[4] = -0.5;
    c.weights[12] = -0.5;
  } else if (name == "stim1-vs-stim2") {
    const int stride = with_derivative ? 2 : 1;
    if (p < 2 * stride) throw ConfigError("stim1-vs-stim2 needs two conditions");
    c.weights[0] = 1.0;
    c.weights[stride] = -1.0;
  } else {
    throw LookupError("unknown contrast preset '" + name + "' (expected faces-vs-places or stim1-vs-stim2)");
  }
  return c;
}

ContrastSpec ContrastSpec::parse(const std::string& csv) {
  std::vector<double> w;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      w.push_back(std::stod(tok, &used));
      if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("bad contrast weight '" + tok + "'");
    }
  }
  if (w.empty()) throw ConfigError("empty contrast weight list");
  ContrastSpec c;
  c.name = "custom";
  c.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  return c;
}

std::size_t SignificanceMap::n_flagged() const { return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), true)); }

int simbas_rank(int m, double alpha) {
  // ceil((1 - alpha) M) = M - floor(alpha M)
  const auto excl = static_cast<int>(std::floor(alpha * m + 1e-9));
  return std::clamp(m - excl, 1, m);
}

namespace {

std::vector<bool> threshold(const SignificanceMap& map, double alpha) {
  const auto allowed = static_cast<int>(std::floor(alpha * map.n_draws + 1e-9));
  std::vector<bool> out(map.analysed.size(), false);
  for (std::size_t v = 0; v < out.size(); ++v) {
    if (!map.analysed[v]) continue;
    const auto count = static_cast<int>(std::lround(map.p_simbas[static_cast<Eigen::Index>(v)] * map.n_draws));
    out[v] = count <= allowed;
  }
  return out;
}

}  // namespace

std::vector<bool> flags_at(const SignificanceMap& map, double alpha) { return threshold(map, alpha); }

SignificanceMap simbas(const ContrastDrawSource& src, double alpha, const std::vector<bool>* analysed, int block_rows) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  const int m = src.n_draws();
  const auto nv = src.n_voxels();
  const auto nvi = static_cast<Eigen::Index>(nv);
  if (m < 100) throw ConfigError("SimBas needs at least 100 posterior draws, got " + std::to_string(m));
  if (analysed && analysed->size() != nv) throw ConfigError("analysed mask length does not match voxel count");
  block_rows = std::max(1, block_rows);

  SignificanceMap out;
  out.alpha = alpha;
  out.n_draws = m;
  out.analysed = analysed ? *analysed : std::vector<bool>(nv, true);

  // Pass 1: mean and variance (Chan et al. block merge).
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(nvi), m2 = Eigen::VectorXd::Zero(nvi);
  double n = 0.0;
  for (int first = 0; first < m; first += block_rows) {
    const int cnt = std::min(block_rows, m - first);
    const Eigen::MatrixXd b = src.block(first, cnt);
    const Eigen::VectorXd bm = b.colwise().mean().transpose();
    const Eigen::VectorXd bm2 = (b.rowwise() - bm.transpose()).colwise().squaredNorm().transpose();
    const double nb = cnt, nt = n + nb;
    const Eigen::VectorXd delta = bm - mean;
    mean += delta * (nb / nt);
    m2 += bm2 + delta.cwiseAbs2() * (n * nb / nt);
    n = nt;
  }
  out.mean = mean;
  out.stddev = (m2 / (m - 1.0)).cwiseSqrt();

  std::vector<std::size_t> zero_std;
  for (std::size_t v = 0; v < nv; ++v) {
    if (!out.analysed[v]) continue;
    const auto vi = static_cast<Eigen::Index>(v);
    if (!(out.stddev[vi] > 0.0)) zero_std.push_back(v);
  }
  if (!zero_std.empty()) {
    std::ostringstream os;
    os << "degenerate voxels (zero posterior std) at " << zero_std.size() << " analysed voxel(s):";
    for (std::size_t i = 0; i < std::min<std::size_t>(zero_std.size(), 10); ++i) os << ' ' << zero_std[i];
    if (zero_std.size() > 10) os << " ...";
    throw NumericalError(os.str());
  }

  Eigen::VectorXd inv_std = Eigen::VectorXd::Zero(nvi);
  for (std::size_t v = 0; v < nv; ++v)
    if (out.analysed[v]) inv_std[static_cast<Eigen::Index>(v)] = 1.0 / out.stddev[static_cast<Eigen::Index>(v)];

  // Pass 2: z^(m) = max_v |C^(m)(v) - C_hat(v)| / std(v).
  out.z.resize(m);
  for (int first = 0; first < m; first += block_rows) {
    const int cnt = std::min(block_rows, m - first);
    const Eigen::MatrixXd b = src.block(first, cnt);
    for (int r = 0; r < cnt; ++r)
      out.z[first + r] = ((b.row(r).transpose() - mean).cwiseAbs().cwiseProduct(inv_std)).maxCoeff();
  }

  std::vector<double> zs(out.z.data(), out.z.data() + m);
  std::sort(zs.begin(), zs.end());
  out.q = zs[static_cast<std::size_t>(simbas_rank(m, alpha) - 1)];

  out.p_simbas = Eigen::VectorXd::Ones(nvi);
  for (std::size_t v = 0; v < nv; ++v) {
    if (!out.analysed[v]) continue;
    const auto vi = static_cast<Eigen::Index>(v);
    const double t = std::abs(mean[vi]) * inv_std[vi];
    // #{m : z^(m) >= t}
    const auto count = zs.end() - std::lower_bound(zs.begin(), zs.end(), t);
    out.p_simbas[vi] = static_cast<double>(count) / m;
  }
  out.flagged = threshold(out, alpha);
  return out;
}

SignificanceMap simbas(const Eigen::MatrixXd& draws, double alpha, const std::vector<bool>* analysed) {
  return simbas(MatrixDrawSource(draws), alpha, analysed);
}

}  // namespace hybasis
