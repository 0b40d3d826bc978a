#include "hybasis/long_memory.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "hybasis/errors.hpp"

namespace hybasis {

LongMemoryParams estimate_long_memory(std::span<const double> coeffs, std::span<const int> level_index,
                                      double eps) {
  if (coeffs.size() != level_index.size()) throw ConfigError("coefficient and level index lengths differ");

  std::map<int, std::pair<double, int>> acc;  // level -> (sum of squares, count)
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const int m = level_index[i];
    if (m <= 0) continue;
    auto& [ss, n] = acc[m];
    ss += coeffs[i] * coeffs[i];
    ++n;
  }
  std::vector<double> xs, ys;
  for (const auto& [m, sn] : acc) {
    if (sn.second < 2) continue;
    const double v = sn.first / sn.second;
    if (!(v > 0.0)) {
      std::ostringstream os;
      os << "degenerate series: wavelet level " << m << " has zero variance";
      throw NumericalError(os.str());
    }
    xs.push_back(m);
    ys.push_back(std::log2(v));
  }
  if (xs.size() < 2) throw ConfigError("long-memory estimation needs >= 2 levels with >= 2 coefficients");

  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  LongMemoryParams out;
  out.alpha = std::clamp(-slope, eps, 1.0 - eps);
  // Intercept at the (possibly clamped) slope.
  out.psi = std::exp2(my + out.alpha * mx);
  return out;
}

Eigen::VectorXd level_variance_profile(std::span<const int> level_index, double alpha) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(level_index.size()));
  for (std::size_t i = 0; i < level_index.size(); ++i) {
    const int m = std::max(1, level_index[i]);
    out[static_cast<Eigen::Index>(i)] = std::exp2(-alpha * m);
  }
  return out;
}

}  // namespace hybasis
