#include "hybasis/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hybasis/errors.hpp"

namespace hybasis {
namespace {

std::vector<double> make_d4() {
  const double s3 = std::sqrt(3.0), d = 4.0 * std::sqrt(2.0);
  return {(1 + s3) / d, (3 + s3) / d, (3 - s3) / d, (1 - s3) / d};
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// One periodic analysis step on data[0..n): writes approx to out[0..n/2),
// detail to out[n/2..n).
void analysis_step(const double* data, double* out, int n, const std::vector<double>& h,
                   const std::vector<double>& g) {
  const int half = n / 2;
  const int len = static_cast<int>(h.size());
  for (int k = 0; k < half; ++k) {
    double a = 0.0, d = 0.0;
    for (int j = 0; j < len; ++j) {
      const double x = data[(2 * k + j) % n];
      a += h[static_cast<std::size_t>(j)] * x;
      d += g[static_cast<std::size_t>(j)] * x;
    }
    out[k] = a;
    out[half + k] = d;
  }
}

void synthesis_step(const double* in, double* out, int n, const std::vector<double>& h,
                    const std::vector<double>& g) {
  const int half = n / 2;
  const int len = static_cast<int>(h.size());
  std::fill(out, out + n, 0.0);
  for (int k = 0; k < half; ++k) {
    const double a = in[k], d = in[half + k];
    for (int j = 0; j < len; ++j)
      out[(2 * k + j) % n] += h[static_cast<std::size_t>(j)] * a + g[static_cast<std::size_t>(j)] * d;
  }
}

}  // namespace

WaveletFamily parse_wavelet_family(const std::string& name) {
  const auto n = lower(name);
  if (n == "haar" || n == "db1" || n == "d2") return WaveletFamily::Haar;
  if (n == "d4" || n == "db2" || n == "daubechies4" || n == "daubechies-4") return WaveletFamily::D4;
  if (n == "d6" || n == "db3" || n == "daubechies6") return WaveletFamily::D6;
  if (n == "d8" || n == "db4" || n == "daubechies8") return WaveletFamily::D8;
  throw ConfigError("unknown wavelet family '" + name + "'");
}

std::string to_string(WaveletFamily f) {
  switch (f) {
    case WaveletFamily::Haar: return "haar";
    case WaveletFamily::D4: return "d4";
    case WaveletFamily::D6: return "d6";
    case WaveletFamily::D8: return "d8";
  }
  return "d4";
}

WaveletBoundary parse_wavelet_boundary(const std::string& name) {
  if (lower(name) == "periodic") return WaveletBoundary::Periodic;
  throw ConfigError("unsupported wavelet boundary '" + name + "' (only 'periodic')");
}

std::string to_string(WaveletBoundary) { return "periodic"; }

const std::vector<double>& lowpass_filter(WaveletFamily f) {
  static const std::vector<double> haar{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
  static const std::vector<double> d4 = make_d4();
  static const std::vector<double> d6{0.33267055295008261599851158914, 0.80689150931109257649449360409,
                                      0.45987750211849157009515194215, -0.13501102001025458869638990670,
                                      -0.08544127388202666169281916918, 0.03522629188570953660274066472};
  static const std::vector<double> d8{0.23037781330889650086329118304, 0.71484657055291564708992195527,
                                      0.63088076792985890788171633830, -0.02798376941685985421141374718,
                                      -0.18703481171909308407957067279, 0.03084138183556076362721936253,
                                      0.03288301166688519973540751355, -0.01059740178506903210488320852};
  switch (f) {
    case WaveletFamily::Haar: return haar;
    case WaveletFamily::D4: return d4;
    case WaveletFamily::D6: return d6;
    case WaveletFamily::D8: return d8;
  }
  return d4;
}

std::vector<double> highpass_filter(WaveletFamily f) {
  const auto& h = lowpass_filter(f);
  const std::size_t n = h.size();
  std::vector<double> g(n);
  for (std::size_t j = 0; j < n; ++j) g[j] = ((j % 2 == 0) ? 1.0 : -1.0) * h[n - 1 - j];
  return g;
}

int default_wavelet_levels(int n_time) {
  if (n_time < 1) return 0;
  int lg = 0;
  while ((2 << lg) <= n_time) ++lg;  // floor(log2 n)
  return lg - 2;
}

WaveletPlan::WaveletPlan(int n_time, WaveletFamily family, int levels, WaveletBoundary boundary)
    : family_(family), boundary_(boundary), n_time_(n_time) {
  if (n_time < 2) throw ConfigError("wavelet plan needs at least 2 time points");
  levels_ = levels > 0 ? levels : default_wavelet_levels(n_time);
  if (levels_ < 1) {
    std::ostringstream os;
    os << "series of length " << n_time << " is too short for a default wavelet decomposition";
    throw ConfigError(os.str());
  }
  if (levels_ > 30 || n_time < (1 << levels_)) {
    std::ostringstream os;
    os << "series of length " << n_time << " is too short for " << levels_ << " wavelet levels";
    throw ConfigError(os.str());
  }
  padded_ = 1;
  while (padded_ < n_time) padded_ *= 2;

  pad_source_.resize(static_cast<std::size_t>(padded_));
  for (int i = 0; i < padded_; ++i) pad_source_[static_cast<std::size_t>(i)] = i < n_time ? i : 2 * n_time - 1 - i;

  // Level M (finest) has padded/2 coefficients, level 1 padded / 2^M.
  level_counts_.resize(static_cast<std::size_t>(levels_));
  for (int m = 1; m <= levels_; ++m) level_counts_[static_cast<std::size_t>(m - 1)] = padded_ >> (levels_ - m + 1);
  scaling_count_ = padded_ >> levels_;

  level_index_.reserve(static_cast<std::size_t>(padded_));
  level_index_.insert(level_index_.end(), static_cast<std::size_t>(scaling_count_), 0);
  for (int m = 1; m <= levels_; ++m)
    level_index_.insert(level_index_.end(), static_cast<std::size_t>(level_count(m)), m);
}

Eigen::VectorXd WaveletPlan::pad(std::span<const double> series) const {
  if (static_cast<int>(series.size()) != n_time_) throw ConfigError("series length does not match wavelet plan");
  Eigen::VectorXd out(padded_);
  for (int i = 0; i < padded_; ++i) out[i] = series[static_cast<std::size_t>(pad_source_[static_cast<std::size_t>(i)])];
  return out;
}

Eigen::VectorXd WaveletPlan::forward(std::span<const double> series) const {
  const Eigen::VectorXd p = pad(series);
  return forward_padded(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
}

Eigen::VectorXd WaveletPlan::forward_padded(std::span<const double> padded) const {
  if (static_cast<int>(padded.size()) != padded_) throw ConfigError("padded series length mismatch");
  const auto& h = lowpass_filter(family_);
  const auto g = highpass_filter(family_);
  Eigen::VectorXd work = Eigen::Map<const Eigen::VectorXd>(padded.data(), padded_);
  Eigen::VectorXd tmp(padded_);
  // After each step the front half holds the running approximation; detail
  // blocks accumulate toward the back so the final layout is coarse-to-fine.
  int n = padded_;
  for (int step = 0; step < levels_; ++step) {
    analysis_step(work.data(), tmp.data(), n, h, g);
    std::copy(tmp.data(), tmp.data() + n, work.data());
    n /= 2;
  }
  return work;
}

Eigen::VectorXd WaveletPlan::inverse_padded(std::span<const double> coeffs) const {
  if (static_cast<int>(coeffs.size()) != padded_) throw ConfigError("coefficient vector length mismatch");
  const auto& h = lowpass_filter(family_);
  const auto g = highpass_filter(family_);
  Eigen::VectorXd work = Eigen::Map<const Eigen::VectorXd>(coeffs.data(), padded_);
  Eigen::VectorXd tmp(padded_);
  int n = scaling_count_ * 2;
  for (int step = 0; step < levels_; ++step) {
    synthesis_step(work.data(), tmp.data(), n, h, g);
    std::copy(tmp.data(), tmp.data() + n, work.data());
    n *= 2;
  }
  return work;
}

Eigen::VectorXd WaveletPlan::inverse(std::span<const double> coeffs) const {
  return inverse_padded(coeffs).head(n_time_);
}

Eigen::MatrixXd WaveletPlan::forward_columns(const Eigen::MatrixXd& m) const {
  if (m.rows() != n_time_) throw ConfigError("matrix row count does not match wavelet plan");
  Eigen::MatrixXd out(padded_, m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const Eigen::VectorXd col = m.col(c);
    out.col(c) = forward(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
  }
  return out;
}

Eigen::MatrixXd WaveletPlan::squared_row_weights() const {
  // Row i of W is W^T e_i, i.e. the inverse transform of a unit coefficient.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(levels_ + 1, padded_);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(padded_);
  for (int i = 0; i < padded_; ++i) {
    e[i] = 1.0;
    const Eigen::VectorXd row = inverse_padded(std::span<const double>(e.data(), static_cast<std::size_t>(padded_)));
    a.row(level_index_[static_cast<std::size_t>(i)]) += row.cwiseAbs2().transpose();
    e[i] = 0.0;
  }
  return a;
}

Eigen::VectorXd dwt(std::span<const double> series, const WaveletPlan& plan) { return plan.forward(series); }

Eigen::VectorXd idwt(std::span<const double> coeffs, const WaveletPlan& plan) { return plan.inverse(coeffs); }

}  // namespace hybasis
