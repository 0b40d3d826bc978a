#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hybasis/design.hpp"
#include "hybasis/volume.hpp"

namespace hybasis {

enum class TemporalKind { Iid, Ar2 };
enum class NoiseKind { ShortRange, LongRange };
enum class BaselineKind { Cosine, Zero, File };

TemporalKind parse_temporal_kind(const std::string& name);
NoiseKind parse_noise_kind(const std::string& name);
BaselineKind parse_baseline_kind(const std::string& name);
std::string to_string(TemporalKind k);
std::string to_string(NoiseKind k);
std::string to_string(BaselineKind k);

struct ShortRangeParams {
  TemporalKind temporal = TemporalKind::Ar2;
  double phi1 = 0.9;
  double phi2 = -0.8;
  double innovation_var = 0.5;  ///< Var(eps); iid mode uses unit variance
  int burn_in = 200;
};

struct LongRangeParams {
  double factor_var = 0.5;  ///< Var(e_{t,k})
  double amplitude = 2.0;
};

/// Planted entry of Sigma_roi, 1-based ROI labels.
struct PlantedCorrelation {
  int roi_a = 0;
  int roi_b = 0;
  double value = 0.0;
};

/// Axis-aligned ellipsoid in 0-based voxel coordinates.
struct Ellipsoid {
  std::array<double, 3> center{};
  std::array<double, 3> semi_axes{};
  int condition = 0;  ///< 0-based condition index
  double amplitude = 1.0;

  bool contains(int i, int j, int k) const;
};

struct BlockDesign {
  std::vector<std::string> conditions{"stim1", "stim2"};
  /// Onset frames per condition.
  std::vector<std::vector<int>> onsets{{4, 36, 68}, {20, 52, 84}};
  int block_frames = 8;
};

struct SimConfig {
  Dims dims{32, 32, 25};
  int n_time = 100;
  double tr = 2.0;
  double kappa0 = 1.0;
  double kappa1 = 0.5;
  double kappa2 = 2.2;
  NoiseKind noise = NoiseKind::LongRange;
  ShortRangeParams short_range;
  LongRangeParams long_range;
  std::vector<PlantedCorrelation> planted{{1, 22, 0.7}, {4, 5, 0.6}, {2, 7, 0.8}};
  int n_rois = 33;
  int lloyd_iterations = 10;
  std::size_t min_roi_size = Parcellation::kDefaultMinRoiSize;
  std::uint64_t parcellation_seed = 20200101;
  BaselineKind baseline = BaselineKind::Cosine;
  double baseline_amplitude = 100.0;
  std::optional<std::filesystem::path> baseline_file;
  std::vector<Ellipsoid> activation{{{10.0, 10.0, 12.0}, {5.0, 4.0, 3.0}, 0, 1.0},
                                    {{22.0, 22.0, 12.0}, {5.0, 4.0, 3.0}, 1, 1.0}};
  BlockDesign design;
  double null_noise_scale = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// 7-point L1 stencil average of independent per-voxel series.
Volume4D gen_short_range(const Dims& dims, int n_time, const ShortRangeParams& params, std::uint64_t seed);
/// Three sinusoidally loaded shared factors plus a short-range field.
Volume4D gen_long_range(const Dims& dims, int n_time, const LongRangeParams& lr, const ShortRangeParams& sr,
                        std::uint64_t seed);

/// Number of in-grid voxels within L1 distance 1 (m_v).
int stencil_size(const Dims& dims, int i, int j, int k);
/// Spatial loadings (2 sin(pi v1/10), 2 cos(pi v2/10), 2 sin(pi v3/5)) with
/// 1-based coordinates v.
std::array<double, 3> long_range_loadings(int v1, int v2, int v3, double amplitude = 2.0);

/// Seeded Voronoi partition with Lloyd refinement; labels 1..n_rois ordered by
/// centroid (z, y, x). Throws ConfigError if a region ends up below min_size.
Parcellation voronoi_parcellation(const Dims& dims, int n_rois, std::uint64_t seed, int lloyd_iterations,
                                  std::size_t min_size);

/// Unit-diagonal Sigma_roi with the planted entries. Throws ConfigError with a
/// nearest positive semidefinite suggestion if it is not positive definite.
Eigen::MatrixXd planted_roi_covariance(int n_rois, const std::vector<PlantedCorrelation>& planted);

StimulusSchedule block_schedule(const BlockDesign& design, double tr, int n_time);
Eigen::MatrixXd ellipsoid_coefficients(const Dims& dims, const std::vector<Ellipsoid>& shapes, int n_conditions);
Eigen::VectorXd synthetic_baseline(const Dims& dims, double amplitude);

struct SimTruth {
  Eigen::MatrixXd b_true;       ///< Nv x P
  Eigen::VectorXd contrast;     ///< B_1 - B_2 per voxel
  Eigen::MatrixXd sigma_roi;    ///< K x K
  std::vector<PlantedCorrelation> planted;
};

struct SimDataset {
  Volume4D volume;
  Parcellation parcellation;
  StimulusSchedule schedule;
  DesignMatrix design;
  Eigen::VectorXd baseline;
  SimTruth truth;
};

/// Y = Ybar + kappa0 X B + kappa1 U + kappa2 E with U_t = e_t Lambda.
SimDataset gen_activation_dataset(const SimConfig& cfg);
Volume4D gen_activation_dataset(const SimConfig& cfg, const Parcellation& parc, const Eigen::MatrixXd& b_true,
                                const Eigen::MatrixXd& design, const Eigen::VectorXd& baseline,
                                const Eigen::MatrixXd& sigma_roi);

/// Y = Ybar + null_noise_scale * E (no stimulus or ROI term).
SimDataset gen_null_dataset(const SimConfig& cfg);

/// ROI factor series e_t ~ N(0, Sigma_roi), T x K.
Eigen::MatrixXd roi_factors(const Eigen::MatrixXd& sigma_roi, int n_time, std::uint64_t seed);

void save_truth(const SimTruth& truth, const Dims& dims, const std::filesystem::path& stem);
SimTruth load_truth(const std::filesystem::path& path);

}  // namespace hybasis
