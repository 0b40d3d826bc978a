#include "hybasis/design.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hybasis/errors.hpp"

namespace hybasis {
namespace {

double gamma_density(double t, double shape, double scale) {
  if (t <= 0.0) return 0.0;
  const double log_g = (shape - 1.0) * std::log(t) - t / scale - std::lgamma(shape) - shape * std::log(scale);
  return std::exp(log_g);
}

// d/dt of the gamma density: g(t) * ((shape - 1) / t - 1 / scale).
double gamma_density_derivative(double t, double shape, double scale) {
  if (t <= 0.0) return 0.0;
  return gamma_density(t, shape, scale) * ((shape - 1.0) / t - 1.0 / scale);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

double double_gamma_hrf(double t, const HrfParams& p) {
  if (t < 0.0) throw ConfigError("double_gamma_hrf: negative time");
  return gamma_density(t, p.peak_shape, p.peak_dispersion) -
         p.ratio * gamma_density(t, p.undershoot_shape, p.undershoot_dispersion);
}

double double_gamma_hrf_derivative(double t, const HrfParams& p) {
  if (t < 0.0) throw ConfigError("double_gamma_hrf_derivative: negative time");
  return gamma_density_derivative(t, p.peak_shape, p.peak_dispersion) -
         p.ratio * gamma_density_derivative(t, p.undershoot_shape, p.undershoot_dispersion);
}

void StimulusSchedule::validate(int n_time) const {
  if (!(tr > 0.0)) throw ConfigError("TR must be positive");
  if (n_time <= 0) throw ConfigError("n_time must be positive");
  const double span = n_time * tr;
  for (const auto& e : events) {
    if (std::find(conditions.begin(), conditions.end(), e.condition) == conditions.end())
      throw ConfigError("event refers to undeclared condition '" + e.condition + "'");
    if (e.onset < 0.0) throw ConfigError("negative onset for condition '" + e.condition + "'");
    if (e.duration < 0.0) throw ConfigError("negative duration for condition '" + e.condition + "'");
    if (e.onset + e.duration > span + 1e-9) {
      std::ostringstream os;
      os << "event of '" << e.condition << "' at " << e.onset << "s runs past the run end (" << span << "s)";
      throw ConfigError(os.str());
    }
  }
}

StimulusSchedule read_events_csv(const std::filesystem::path& path, double tr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open events file " + path.string());
  StimulusSchedule sched;
  sched.tr = tr;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty events file " + path.string());
  if (trim(line) != "condition,onset,duration")
    throw IoError("events file must start with header 'condition,onset,duration'");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string cond, onset, dur;
    if (!std::getline(ss, cond, ',') || !std::getline(ss, onset, ',') || !std::getline(ss, dur))
      throw IoError("malformed events line " + std::to_string(lineno));
    StimulusEvent ev;
    ev.condition = trim(cond);
    try {
      ev.onset = std::stod(onset);
      ev.duration = std::stod(dur);
    } catch (const std::exception&) {
      throw IoError("non-numeric onset/duration on events line " + std::to_string(lineno));
    }
    if (std::find(sched.conditions.begin(), sched.conditions.end(), ev.condition) == sched.conditions.end())
      sched.conditions.push_back(ev.condition);
    sched.events.push_back(std::move(ev));
  }
  return sched;
}

void write_events_csv(const StimulusSchedule& sched, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write events file " + path.string());
  out.precision(17);
  out << "condition,onset,duration\n";
  for (const auto& e : sched.events) out << e.condition << ',' << e.onset << ',' << e.duration << '\n';
}

void standardize_columns(Eigen::MatrixXd& m) {
  const double n = static_cast<double>(m.rows());
  if (m.rows() < 2) throw NumericalError("cannot standardize columns with fewer than 2 rows");
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    auto col = m.col(c);
    const double mean = col.mean();
    col.array() -= mean;
    const double var = col.squaredNorm() / (n - 1.0);
    if (!(var > 1e-24)) throw NumericalError("design column " + std::to_string(c) + " is constant");
    col /= std::sqrt(var);
  }
}

DesignMatrix build_design(const StimulusSchedule& sched, int n_time, const DesignOptions& opts) {
  sched.validate(n_time);
  if (opts.microtime < 1) throw ConfigError("microtime factor must be >= 1");

  const int up = opts.microtime;
  const double dt = sched.tr / up;
  const int n_fine = n_time * up;
  const int n_kernel = std::max(1, static_cast<int>(std::ceil(opts.hrf.length / dt)));

  std::vector<double> h(static_cast<std::size_t>(n_kernel)), dh(static_cast<std::size_t>(n_kernel));
  for (int k = 0; k < n_kernel; ++k) {
    h[static_cast<std::size_t>(k)] = double_gamma_hrf(k * dt, opts.hrf);
    dh[static_cast<std::size_t>(k)] = double_gamma_hrf_derivative(k * dt, opts.hrf);
  }

  const int per_cond = opts.include_derivative ? 2 : 1;
  DesignMatrix d;
  d.values.resize(n_time, static_cast<Eigen::Index>(sched.conditions.size()) * per_cond);

  for (std::size_t c = 0; c < sched.conditions.size(); ++c) {
    const auto& name = sched.conditions[c];
    std::vector<double> boxcar(static_cast<std::size_t>(n_fine), 0.0);
    int n_events = 0;
    for (const auto& e : sched.events) {
      if (e.condition != name) continue;
      ++n_events;
      if (e.duration <= 0.0) {  // impulse
        const auto i = static_cast<int>(std::floor(e.onset / dt + 0.5));
        if (i < n_fine) boxcar[static_cast<std::size_t>(i)] = 1.0;
        continue;
      }
      for (int i = 0; i < n_fine; ++i) {
        const double t = i * dt;
        if (t >= e.onset - 1e-9 && t < e.onset + e.duration - 1e-9) boxcar[static_cast<std::size_t>(i)] = 1.0;
      }
    }
    if (n_events == 0) throw ConfigError("condition '" + name + "' has no events");

    auto convolve = [&](const std::vector<double>& kernel, Eigen::Index col) {
      for (int ti = 0; ti < n_time; ++ti) {
        const int i = ti * up;
        double acc = 0.0;
        for (int k = 0; k <= std::min(i, n_kernel - 1); ++k)
          acc += boxcar[static_cast<std::size_t>(i - k)] * kernel[static_cast<std::size_t>(k)];
        d.values(ti, col) = acc * dt;
      }
    };
    const auto base = static_cast<Eigen::Index>(c) * per_cond;
    convolve(h, base);
    d.columns.push_back({name, RegressorKind::Hrf});
    if (opts.include_derivative) {
      convolve(dh, base + 1);
      d.columns.push_back({name, RegressorKind::HrfDerivative});
    }
  }
  if (opts.standardize) standardize_columns(d.values);
  return d;
}

}  // namespace hybasis
