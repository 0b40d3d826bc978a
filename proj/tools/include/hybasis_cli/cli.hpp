#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hybasis::cli {

namespace fs = std::filesystem;

struct SimulateArgs {
  std::string regime = "activation";
  int replicates = 1;
  std::uint64_t seed = 1;
  fs::path out;
  std::string noise = "long";
  std::string temporal = "ar2";
  double kappa0 = 1.0;
  double kappa1 = 0.5;
  double kappa2 = 2.2;
  int n_time = 100;
  std::vector<int> dims{32, 32, 25};
  double tr = 2.0;
  std::string baseline = "cosine";
  fs::path baseline_file;
  double baseline_amplitude = 100.0;
  double null_scale = 1.0;
  int threads = 0;
};

struct FitArgs {
  fs::path volume;
  fs::path parcellation;
  fs::path events;
  double tr = 0.0;
  bool derivative = false;
  std::string mode = "CHSB";
  double al = 0.9;
  double ag = 0.9;
  std::string wavelet = "d4";
  int levels = 0;
  int iters = 6000;
  int burnin = 2000;
  int thin = 5;
  double kv = 100.0;
  double a0 = 0.01;
  double b0 = 0.01;
  std::uint64_t seed = 1;
  std::size_t min_roi_size = 125;
  int threads = 0;
  fs::path out;
};

struct ContrastArgs {
  fs::path run;
  std::string preset;
  std::string weights;
  double alpha = 0.05;
  int connectivity = 6;
  std::size_t min_cluster = 1;
  fs::path truth;
  int threads = 0;
  fs::path out;
};

struct ConnectivityArgs {
  fs::path run;
  double threshold = 0.7;
  std::string mode_estimator = "histogram";
  std::string denominator = "components";
  int draw_stride = 0;
  int threads = 0;
  fs::path out;
};

struct ReportArgs {
  fs::path run;
  int threads = 0;
  fs::path out;
};

void cmd_simulate(const SimulateArgs& args);
void cmd_fit(const FitArgs& args);
void cmd_contrast(const ContrastArgs& args);
void cmd_connectivity(const ConnectivityArgs& args);
void cmd_report(const ReportArgs& args);

/// Exit codes: 0 success, 1 unexpected failure, 2 configuration or lookup
/// error, 3 numerical error, 4 I/O or validation error.
int run(int argc, const char* const* argv);

}  // namespace hybasis::cli
