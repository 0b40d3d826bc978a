#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hybasis {

/// Double-gamma HRF h(t) = g(t; peak) - ratio * g(t; undershoot), g a gamma
/// density with shape `*_shape` and scale `dispersion`. Defaults are the
/// SPM canonical shape.
struct HrfParams {
  double peak_shape = 6.0;
  double undershoot_shape = 16.0;
  double ratio = 1.0 / 6.0;
  double peak_dispersion = 1.0;
  double undershoot_dispersion = 1.0;
  double length = 32.0;  ///< kernel support in seconds
};

double double_gamma_hrf(double t, const HrfParams& p = {});
/// Analytic dh/dt.
double double_gamma_hrf_derivative(double t, const HrfParams& p = {});

struct StimulusEvent {
  std::string condition;
  double onset = 0.0;     ///< seconds
  double duration = 0.0;  ///< seconds
};

struct StimulusSchedule {
  std::vector<std::string> conditions;
  std::vector<StimulusEvent> events;
  double tr = 0.0;  ///< seconds between frames

  /// Throws ConfigError when tr <= 0, an onset is negative, an event runs past
  /// n_time * tr, or an event names an undeclared condition.
  void validate(int n_time) const;
};

/// Reads `condition,onset,duration` CSV. Conditions keep first-appearance order.
StimulusSchedule read_events_csv(const std::filesystem::path& path, double tr);
void write_events_csv(const StimulusSchedule& sched, const std::filesystem::path& path);

enum class RegressorKind { Hrf, HrfDerivative };

struct ColumnMeta {
  std::string condition;
  RegressorKind kind = RegressorKind::Hrf;
};

struct DesignMatrix {
  Eigen::MatrixXd values;  ///< T x P
  std::vector<ColumnMeta> columns;

  int n_time() const { return static_cast<int>(values.rows()); }
  int n_regressors() const { return static_cast<int>(values.cols()); }
};

struct DesignOptions {
  bool include_derivative = false;
  bool standardize = true;
  int microtime = 1;  ///< box-car upsampling factor per TR
  HrfParams hrf{};
};

/// Per condition: box-car (sampled at TR / microtime) convolved with the sampled
/// HRF, truncated to n_time frames; optional derivative column right after it.
/// Columns are standardized (mean 0, sample variance 1) last.
DesignMatrix build_design(const StimulusSchedule& sched, int n_time, const DesignOptions& opts = {});

/// In-place standardization; throws NumericalError on a constant column.
void standardize_columns(Eigen::MatrixXd& m);

}  // namespace hybasis
