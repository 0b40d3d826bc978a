#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>

#include <Eigen/Core>
#include <json.hpp>

#include "hybasis/clusters.hpp"
#include "hybasis/connectivity.hpp"
#include "hybasis/design.hpp"
#include "hybasis/errors.hpp"
#include "hybasis/io.hpp"
#include "hybasis/metrics.hpp"
#include "hybasis/pipeline.hpp"
#include "hybasis/simulator.hpp"
#include "hybasis_cli/cli.hpp"

#ifndef HYBASIS_VERSION
#define HYBASIS_VERSION "0.0.0"
#endif

namespace hybasis::cli {
namespace {

using nlohmann::json;

constexpr const char* kFitFile = "fit.json";
constexpr const char* kBasisStem = "basis";
constexpr const char* kDrawsStem = "draws";

void set_threads(int n) {
  if (n < 0) throw ConfigError("--threads must be >= 0");
  if (n > 0) omp_set_num_threads(n);
}

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) throw ConfigError("--out is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_json(const fs::path& file, const json& j) { write_text(file, j.dump(2) + "\n"); }

json read_json(const fs::path& file) {
  if (!fs::exists(file)) throw IoError("missing " + file.string());
  try {
    return json::parse(read_text(file));
  } catch (const json::exception& e) {
    throw IoError("malformed " + file.string() + ": " + e.what());
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

void write_manifest(const fs::path& dir, const std::string& command, const json& config, std::uint64_t seed) {
  json m;
  m["tool"] = "hybasis";
  m["version"] = HYBASIS_VERSION;
  m["command"] = command;
  m["seed"] = seed;
  m["config"] = config;
  m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
#if defined(__clang__)
  m["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  m["compiler"] = std::string("gcc ") + __VERSION__;
#endif
  m["openmp"] = _OPENMP;
  write_json(dir / "manifest.json", m);
}

void write_matrix_csv(const fs::path& file, const std::vector<std::string>& header, const Eigen::MatrixXd& m) {
  std::ostringstream os;
  for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  os << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << fmt(m(r, c));
    os << '\n';
  }
  write_text(file, os.str());
}

std::vector<std::string> design_header(const DesignMatrix& d) {
  std::vector<std::string> h;
  for (const auto& c : d.columns) h.push_back(c.kind == RegressorKind::Hrf ? c.condition : c.condition + "_deriv");
  return h;
}

void save_map(const Eigen::VectorXd& values, const Dims& dims, const fs::path& stem) {
  save_volume(Volume4D(dims, values.transpose()), stem);
}

RvDenominator parse_denominator(const std::string& name) {
  if (name == "components") return RvDenominator::Components;
  if (name == "voxels") return RvDenominator::Voxels;
  throw ConfigError("unknown RV denominator '" + name + "' (expected components or voxels)");
}

std::string to_string(RvDenominator d) { return d == RvDenominator::Components ? "components" : "voxels"; }

json cluster_json(const ClusterReport& report, const Dims& dims) {
  json out = json::array();
  for (const auto& c : report.clusters) {
    const auto pc = dims.coords(c.peak_voxel);
    out.push_back({{"label", c.label},
                   {"size", c.size},
                   {"bbox_min", c.bbox_min},
                   {"bbox_max", c.bbox_max},
                   {"peak_voxel", c.peak_voxel},
                   {"peak_coords", pc},
                   {"peak_value", c.peak_value}});
  }
  return out;
}

json cluster_table_json(const ClusterReport& report) {
  json t = json::array();
  for (auto s : kClusterTableSizes) {
    const auto [count, total] = report.count_at_least(s);
    t.push_back({{"min_size", s}, {"clusters", count}, {"voxels", total}});
  }
  return t;
}

json metrics_json(const FitMetrics& m) {
  return {{"mse", m.mse},
          {"fp_rate", m.fp_rate},
          {"rp_rate", m.rp_rate},
          {"mean_width", m.mean_width},
          {"n_voxels", m.n_voxels},
          {"n_true", m.n_true},
          {"n_flagged", m.n_flagged},
          {"false_positives", m.false_positives},
          {"true_positives", m.true_positives}};
}

/// Everything a completed `fit` run directory provides.
struct RunArchive {
  json fit;
  CompositeBasis basis;
  PosteriorDraws draws;
  WaveletPlan plan;
  bool derivative = false;
};

RunArchive load_run(const fs::path& run) {
  if (run.empty()) throw ConfigError("--run is required");
  if (!fs::is_directory(run)) throw IoError("run directory " + run.string() + " does not exist");
  RunArchive a;
  a.fit = read_json(run / kFitFile);
  try {
    if (a.fit.at("status").get<std::string>() != "complete")
      throw IoError(run.string() + " holds a fit that did not complete");
    const auto& w = a.fit.at("wavelet");
    a.plan = WaveletPlan(a.fit.at("n_time").get<int>(), parse_wavelet_family(w.at("family").get<std::string>()),
                         w.at("levels").get<int>());
    a.derivative = a.fit.at("inputs").at("derivative").get<bool>();
  } catch (const json::exception& e) {
    throw IoError("malformed " + (run / kFitFile).string() + ": " + e.what());
  }
  a.basis = load_basis(run / (std::string(kBasisStem) + ".basis.json"));
  a.draws = load_draws(run / (std::string(kDrawsStem) + ".draws.json"));
  if (a.draws.n_series != a.basis.n_components())
    throw IoError("draws archive and basis archive in " + run.string() + " disagree on the number of series");
  return a;
}

ContrastSpec make_contrast(const std::string& preset, const std::string& weights, const RunArchive& a) {
  if (!preset.empty() && !weights.empty()) throw ConfigError("give either --preset or --weights, not both");
  if (preset.empty() && weights.empty()) throw ConfigError("a contrast is required (--preset or --weights)");
  ContrastSpec spec = preset.empty() ? ContrastSpec::parse(weights)
                                     : ContrastSpec::preset(preset, a.draws.n_predictors, a.derivative);
  spec.validate(a.draws.n_predictors);
  return spec;
}

struct ConnectivitySettings {
  double threshold = 0.7;
  ModeEstimator estimator = ModeEstimator::Histogram;
  std::string estimator_name = "histogram";
  RvDenominator denominator = RvDenominator::Components;
};

}  // namespace

void cmd_simulate(const SimulateArgs& args) {
  set_threads(args.threads);
  if (args.regime != "activation" && args.regime != "null")
    throw ConfigError("unknown regime '" + args.regime + "' (expected activation or null)");
  if (args.replicates < 1) throw ConfigError("--replicates must be >= 1");
  if (args.dims.size() != 3) throw ConfigError("--dims takes three extents");

  SimConfig base;
  base.dims = {args.dims[0], args.dims[1], args.dims[2]};
  base.n_time = args.n_time;
  base.tr = args.tr;
  base.kappa0 = args.kappa0;
  base.kappa1 = args.kappa1;
  base.kappa2 = args.kappa2;
  base.noise = parse_noise_kind(args.noise);
  base.short_range.temporal = parse_temporal_kind(args.temporal);
  base.baseline = parse_baseline_kind(args.baseline);
  base.baseline_amplitude = args.baseline_amplitude;
  if (base.baseline == BaselineKind::File) {
    if (args.baseline_file.empty()) throw ConfigError("--baseline file needs --baseline-file");
    base.baseline_file = args.baseline_file;
  }
  base.null_noise_scale = args.null_scale;
  base.seed = args.seed;
  base.validate();

  ensure_dir(args.out);
  json config = {{"regime", args.regime},       {"replicates", args.replicates},
                 {"seed", args.seed},           {"noise", to_string(base.noise)},
                 {"temporal", to_string(base.short_range.temporal)},
                 {"kappa", {args.kappa0, args.kappa1, args.kappa2}},
                 {"n_time", args.n_time},       {"dims", args.dims},
                 {"tr", args.tr},               {"baseline", to_string(base.baseline)},
                 {"baseline_amplitude", args.baseline_amplitude},
                 {"null_scale", args.null_scale}};
  write_manifest(args.out, "simulate", config, args.seed);

  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < args.replicates; ++r) {
    try {
      SimConfig cfg = base;
      cfg.seed = args.seed + static_cast<std::uint64_t>(r);
      char name[32];
      std::snprintf(name, sizeof name, "rep_%03d", r);
      const fs::path dir = args.replicates == 1 ? args.out : args.out / name;
      ensure_dir(dir);

      const SimDataset ds = args.regime == "null" ? gen_null_dataset(cfg) : gen_activation_dataset(cfg);
      save_volume(ds.volume, dir / "data");
      save_parcellation(ds.parcellation, dir / "parcellation");
      write_events_csv(ds.schedule, dir / "events.csv");
      write_matrix_csv(dir / "design.csv", design_header(ds.design), ds.design.values);
      save_truth(ds.truth, cfg.dims, dir / "truth");

      json sim = config;
      sim["replicate"] = r;
      sim["seed"] = cfg.seed;
      sim["conditions"] = ds.schedule.conditions;
      sim["n_rois"] = ds.parcellation.n_rois();
      json planted = json::array();
      for (const auto& p : cfg.planted) planted.push_back({{"roi_a", p.roi_a}, {"roi_b", p.roi_b}, {"value", p.value}});
      sim["planted"] = planted;
      json shapes = json::array();
      for (const auto& e : cfg.activation)
        shapes.push_back({{"center", e.center}, {"semi_axes", e.semi_axes}, {"condition", e.condition},
                          {"amplitude", e.amplitude}});
      sim["activation"] = shapes;
      sim["files"] = {{"volume", "data.vol.json"}, {"parcellation", "parcellation.parc.json"},
                      {"events", "events.csv"},    {"design", "design.csv"},
                      {"truth", "truth.truth.json"}};
      write_json(dir / "simulation.json", sim);
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

void cmd_fit(const FitArgs& args) {
  set_threads(args.threads);
  if (args.volume.empty()) throw ConfigError("--volume is required");
  if (args.events.empty()) throw ConfigError("--events is required");
  if (!(args.tr > 0.0)) throw ConfigError("--tr must be positive");

  FitOptions opts;
  opts.mode = parse_basis_mode(args.mode);
  opts.basis.local_threshold = args.al;
  opts.basis.global_threshold = args.ag;
  opts.family = parse_wavelet_family(args.wavelet);
  opts.levels = args.levels;
  opts.model.n_iter = args.iters;
  opts.model.burn_in = args.burnin;
  opts.model.thin = args.thin;
  opts.model.k_v = args.kv;
  opts.model.a0 = args.a0;
  opts.model.b0 = args.b0;
  opts.model.seed = args.seed;
  opts.model.validate();
  const bool uses_rois = opts.mode == BasisMode::CHSB || opts.mode == BasisMode::LSB;
  if (uses_rois && args.parcellation.empty())
    throw ConfigError(to_string(opts.mode) + " requires --parcellation");

  json inputs = {{"volume", args.volume.string()},
                 {"parcellation", args.parcellation.string()},
                 {"events", args.events.string()},
                 {"tr", args.tr},
                 {"derivative", args.derivative}};
  json config = {{"inputs", inputs},
                 {"mode", to_string(opts.mode)},
                 {"al", args.al},
                 {"ag", args.ag},
                 {"wavelet", to_string(opts.family)},
                 {"levels", args.levels},
                 {"iters", args.iters},
                 {"burnin", args.burnin},
                 {"thin", args.thin},
                 {"kv", args.kv},
                 {"a0", args.a0},
                 {"b0", args.b0},
                 {"min_roi_size", args.min_roi_size}};

  const Volume4D vol = load_volume(args.volume);
  std::optional<Parcellation> parc;
  if (!args.parcellation.empty()) parc = load_parcellation(args.parcellation, args.min_roi_size);
  const auto sched = read_events_csv(args.events, args.tr);
  DesignOptions dopts;
  dopts.include_derivative = args.derivative;
  const DesignMatrix design = build_design(sched, vol.n_time(), dopts);

  ensure_dir(args.out);
  write_manifest(args.out, "fit", config, args.seed);
  write_matrix_csv(args.out / "design.csv", design_header(design), design.values);

  json fit = config;
  fit["format"] = "hybasis-fit";
  fit["version"] = 1;
  fit["seed"] = args.seed;
  fit["n_time"] = vol.n_time();
  fit["dims"] = {vol.dims().x, vol.dims().y, vol.dims().z};
  fit["design_columns"] = design_header(design);

  std::string completed = "none";
  auto observer = [&](FitStage stage, const FitResult& r) {
    switch (stage) {
      case FitStage::Basis:
        save_basis(r.basis, args.out / kBasisStem);
        break;
      case FitStage::Wavelet: {
        Eigen::MatrixXd noise(static_cast<Eigen::Index>(r.noise.size()), 2);
        for (std::size_t s = 0; s < r.noise.size(); ++s)
          noise.row(static_cast<Eigen::Index>(s)) << r.noise[s].psi, r.noise[s].alpha;
        write_matrix_csv(args.out / "noise.csv", {"psi", "alpha"}, noise);
        break;
      }
      case FitStage::Mcmc:
        save_draws(r.draws, args.out / kDrawsStem);
        break;
    }
    completed = to_string(stage);
  };

  FitResult result;
  try {
    result = fit_model(vol, parc ? &*parc : nullptr, design.values, opts, observer);
  } catch (const std::exception& e) {
    fit["status"] = "failed";
    fit["last_completed_stage"] = completed;
    fit["error"] = e.what();
    write_json(args.out / kFitFile, fit);
    throw;
  }

  fit["status"] = "complete";
  fit["wavelet"] = {{"family", to_string(result.plan.family())},
                    {"levels", result.plan.levels()},
                    {"padded_length", result.plan.padded_length()}};
  json basis = {{"n_components", result.basis.n_components()},
                {"n_analysed_voxels", result.basis.analysed_voxels().size()}};
  if (const auto& l = result.basis.local()) {
    basis["n_rois"] = l->n_rois();
    basis["local_components"] = l->total_components();
  }
  if (const auto& g = result.basis.global()) basis["global_components"] = g->retained();
  fit["basis"] = basis;
  fit["draws"] = {{"n_draws", result.draws.n_draws},
                  {"n_predictors", result.draws.n_predictors},
                  {"n_series", result.draws.n_series}};
  write_json(args.out / kFitFile, fit);
  write_json(args.out / "timings.json", {{"initial_values", result.timings.initial_values},
                                         {"mcmc", result.timings.mcmc},
                                         {"total", result.timings.total()}});
}

void cmd_contrast(const ContrastArgs& args) {
  set_threads(args.threads);
  const RunArchive a = load_run(args.run);
  const ContrastSpec spec = make_contrast(args.preset, args.weights, a);
  ContrastOptions copts;
  copts.alpha = args.alpha;
  copts.adjacency = parse_adjacency(args.connectivity);
  copts.min_cluster_size = args.min_cluster;
  std::optional<SimTruth> truth;
  if (!args.truth.empty()) truth = load_truth(args.truth);

  const fs::path out = args.out.empty() ? args.run / "contrast" : args.out;
  ensure_dir(out);
  json config = {{"run", args.run.string()},
                 {"contrast", spec.name},
                 {"weights", std::vector<double>(spec.weights.data(), spec.weights.data() + spec.weights.size())},
                 {"alpha", args.alpha},
                 {"connectivity", args.connectivity},
                 {"min_cluster", args.min_cluster},
                 {"truth", args.truth.empty() ? json(nullptr) : json(fs::absolute(args.truth).string())}};
  write_manifest(out, "contrast", config, a.draws.spec.seed);

  const ContrastResult res = analyse_contrast(a.draws, a.basis, spec, copts);
  const auto& map = res.map;
  const Dims& dims = a.basis.dims();

  save_map(map.mean, dims, out / "mean");
  save_map(map.stddev, dims, out / "std");
  save_map(map.p_simbas, dims, out / "psimbas");
  Eigen::VectorXd labels(static_cast<Eigen::Index>(res.clusters.labels.size()));
  for (std::size_t v = 0; v < res.clusters.labels.size(); ++v)
    labels[static_cast<Eigen::Index>(v)] = res.clusters.labels[v];
  save_map(labels, dims, out / "cluster_labels");

  write_json(out / "clusters.json", {{"adjacency", args.connectivity},
                                     {"min_cluster_size", args.min_cluster},
                                     {"n_clusters", res.clusters.clusters.size()},
                                     {"largest", res.clusters.largest()},
                                     {"table", cluster_table_json(res.clusters)},
                                     {"clusters", cluster_json(res.clusters, dims)}});

  std::size_t n_analysed = 0;
  for (bool b : map.analysed) n_analysed += b;
  json sig = config;
  sig["format"] = "hybasis-significance";
  sig["n_draws"] = map.n_draws;
  sig["q"] = map.q;
  sig["n_analysed"] = n_analysed;
  sig["n_flagged"] = map.n_flagged();
  write_json(out / "significance.json", sig);

  std::ostringstream bands;
  bands << "voxel,x,y,z,mean,std,lower,upper,p_simbas,flagged\n";
  const Eigen::VectorXd lo = map.lower(), hi = map.upper();
  for (std::size_t v = 0; v < map.analysed.size(); ++v) {
    if (!map.analysed[v]) continue;
    const auto i = static_cast<Eigen::Index>(v);
    const auto c = dims.coords(v);
    bands << v << ',' << c[0] << ',' << c[1] << ',' << c[2] << ',' << fmt(map.mean[i]) << ',' << fmt(map.stddev[i])
          << ',' << fmt(lo[i]) << ',' << fmt(hi[i]) << ',' << fmt(map.p_simbas[i]) << ',' << (map.flagged[v] ? 1 : 0)
          << '\n';
  }
  write_text(out / "bands.csv", bands.str());

  if (truth) {
    if (static_cast<std::size_t>(truth->contrast.size()) != a.basis.n_voxels())
      throw ConfigError("truth grid does not match the fitted volume");
    write_json(out / "metrics.json", metrics_json(evaluate_fit(truth->contrast, map)));
  }
  write_json(out / "timings.json", {{"projection", res.projection_seconds}, {"simbas", res.simbas_seconds}});
}

void cmd_connectivity(const ConnectivityArgs& args) {
  set_threads(args.threads);
  if (args.draw_stride < 0) throw ConfigError("--draw-stride must be >= 0");
  const RunArchive a = load_run(args.run);
  const auto estimator = parse_mode_estimator(args.mode_estimator);
  const auto denom = parse_denominator(args.denominator);

  const fs::path out = args.out.empty() ? args.run / "connectivity" : args.out;
  const ConnectivityResult res = estimate_connectivity(a.draws, a.basis, a.plan, estimator, denom);
  ensure_dir(out);
  json config = {{"run", args.run.string()},
                 {"threshold", args.threshold},
                 {"mode_estimator", args.mode_estimator},
                 {"denominator", to_string(denom)},
                 {"draw_stride", args.draw_stride}};
  write_manifest(out, "connectivity", config, a.draws.spec.seed);

  write_connectivity_csv(res.matrix, out / "connectivity.csv");
  write_connectivity_long_csv(res.matrix, out / "connectivity_long.csv");
  write_edges_json(select_strong_pairs(res.matrix, args.threshold), args.threshold, out / "edges.json");
  write_matrix_csv(out / "theta.csv", {"theta"}, res.covariance.theta);

  json settings = config;
  settings["format"] = "hybasis-connectivity";
  json top = json::array();
  for (const auto& e : top_pairs(res.matrix, 3)) top.push_back({{"roi_a", e.roi_a}, {"roi_b", e.roi_b}, {"value", e.value}});
  settings["top_pairs"] = top;
  write_json(out / "connectivity.json", settings);

  if (args.draw_stride > 0) {
    const auto mats = connectivity_draws(a.draws, a.basis, a.plan, args.draw_stride, estimator, denom);
    std::ostringstream os;
    os << "roi_a,roi_b,mean,sd,q025,q975\n";
    const auto k = res.matrix.values.rows();
    std::vector<double> vals(mats.size());
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = i + 1; j < k; ++j) {
        double sum = 0.0;
        for (std::size_t d = 0; d < mats.size(); ++d) {
          vals[d] = mats[d].values(i, j);
          sum += vals[d];
        }
        const double mean = sum / static_cast<double>(vals.size());
        double ss = 0.0;
        for (double v : vals) ss += (v - mean) * (v - mean);
        const double sd = vals.size() > 1 ? std::sqrt(ss / static_cast<double>(vals.size() - 1)) : 0.0;
        std::sort(vals.begin(), vals.end());
        auto q = [&](double p) {
          const double pos = p * static_cast<double>(vals.size() - 1);
          const auto lo = static_cast<std::size_t>(std::floor(pos));
          const auto hi = std::min(lo + 1, vals.size() - 1);
          return vals[lo] + (pos - static_cast<double>(lo)) * (vals[hi] - vals[lo]);
        };
        os << res.matrix.roi_ids[static_cast<std::size_t>(i)] << ',' << res.matrix.roi_ids[static_cast<std::size_t>(j)]
           << ',' << fmt(mean) << ',' << fmt(sd) << ',' << fmt(q(0.025)) << ',' << fmt(q(0.975)) << '\n';
      }
    }
    write_text(out / "connectivity_draws.csv", os.str());
  }
}

void cmd_report(const ReportArgs& args) {
  set_threads(args.threads);
  const RunArchive a = load_run(args.run);
  const fs::path out = args.out.empty() ? args.run / "report" : args.out;
  const std::string mode = to_string(a.basis.mode());

  json summary;
  summary["format"] = "hybasis-report";
  summary["mode"] = mode;
  summary["n_series"] = a.draws.n_series;
  summary["n_draws"] = a.draws.n_draws;
  summary["n_predictors"] = a.draws.n_predictors;

  const fs::path sig_file = args.run / "contrast" / "significance.json";
  std::optional<std::string> cluster_csv, metrics_csv;
  if (fs::exists(sig_file)) {
    const json sig = read_json(sig_file);
    ContrastSpec spec;
    ContrastOptions copts;
    std::optional<fs::path> truth_path;
    try {
      spec.name = sig.at("contrast").get<std::string>();
      const auto w = sig.at("weights").get<std::vector<double>>();
      spec.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
      copts.alpha = sig.at("alpha").get<double>();
      copts.adjacency = parse_adjacency(sig.at("connectivity").get<int>());
      copts.min_cluster_size = sig.at("min_cluster").get<std::size_t>();
      if (!sig.at("truth").is_null()) truth_path = sig.at("truth").get<std::string>();
    } catch (const json::exception& e) {
      throw IoError("malformed " + sig_file.string() + ": " + e.what());
    }
    spec.validate(a.draws.n_predictors);
    const ContrastResult res = analyse_contrast(a.draws, a.basis, spec, copts);
    const Eigen::VectorXd width = res.map.width();
    double wsum = 0.0;
    std::size_t n = 0;
    for (std::size_t v = 0; v < res.map.analysed.size(); ++v) {
      if (!res.map.analysed[v]) continue;
      wsum += width[static_cast<Eigen::Index>(v)];
      ++n;
    }
    const double mean_width = n ? wsum / static_cast<double>(n) : 0.0;

    std::ostringstream ct;
    ct << "contrast,n_flagged";
    for (auto s : kClusterTableSizes) ct << ",clusters_ge_" << s << ",voxels_ge_" << s;
    ct << ",largest_cluster,mean_width\n" << spec.name << ',' << res.map.n_flagged();
    for (auto s : kClusterTableSizes) {
      const auto [count, total] = res.clusters.count_at_least(s);
      ct << ',' << count << ',' << total;
    }
    ct << ',' << res.clusters.largest() << ',' << fmt(mean_width) << '\n';
    cluster_csv = ct.str();

    json contrast = {{"name", spec.name},
                     {"alpha", copts.alpha},
                     {"q", res.map.q},
                     {"n_flagged", res.map.n_flagged()},
                     {"largest_cluster", res.clusters.largest()},
                     {"mean_width", mean_width},
                     {"cluster_table", cluster_table_json(res.clusters)}};
    if (truth_path) {
      const SimTruth truth = load_truth(*truth_path);
      const FitMetrics m = evaluate_fit(truth.contrast, res.map);
      contrast["metrics"] = metrics_json(m);
      std::ostringstream mt;
      mt << "mode,contrast,mse,fp_rate,rp_rate,mean_width,n_voxels,n_true,n_flagged,false_positives,true_positives\n"
         << mode << ',' << spec.name << ',' << fmt(m.mse) << ',' << fmt(m.fp_rate) << ',' << fmt(m.rp_rate) << ','
         << fmt(m.mean_width) << ',' << m.n_voxels << ',' << m.n_true << ',' << m.n_flagged << ','
         << m.false_positives << ',' << m.true_positives << '\n';
      metrics_csv = mt.str();
    }
    summary["contrast"] = contrast;
  }

  std::optional<std::string> edges_csv;
  const bool has_rois = a.basis.mode() == BasisMode::CHSB || a.basis.mode() == BasisMode::LSB;
  if (has_rois) {
    ConnectivitySettings cs;
    const fs::path conn_file = args.run / "connectivity" / "connectivity.json";
    if (fs::exists(conn_file)) {
      const json c = read_json(conn_file);
      try {
        cs.threshold = c.at("threshold").get<double>();
        cs.estimator_name = c.at("mode_estimator").get<std::string>();
        cs.denominator = parse_denominator(c.at("denominator").get<std::string>());
      } catch (const json::exception& e) {
        throw IoError("malformed " + conn_file.string() + ": " + e.what());
      }
      cs.estimator = parse_mode_estimator(cs.estimator_name);
    }
    const auto res = estimate_connectivity(a.draws, a.basis, a.plan, cs.estimator, cs.denominator);
    const auto strong = select_strong_pairs(res.matrix, cs.threshold);
    std::ostringstream ec;
    ec << "roi_a,roi_b,sqrt_rv\n";
    json edges = json::array();
    for (const auto& e : strong.edges) {
      ec << e.roi_a << ',' << e.roi_b << ',' << fmt(e.value) << '\n';
      edges.push_back({{"roi_a", e.roi_a}, {"roi_b", e.roi_b}, {"value", e.value}});
    }
    edges_csv = ec.str();
    json top = json::array();
    for (const auto& e : top_pairs(res.matrix, 3)) top.push_back({{"roi_a", e.roi_a}, {"roi_b", e.roi_b}, {"value", e.value}});
    summary["connectivity"] = {{"threshold", cs.threshold},
                               {"mode_estimator", cs.estimator_name},
                               {"denominator", to_string(cs.denominator)},
                               {"n_strong_edges", strong.edges.size()},
                               {"strong_rois", strong.rois},
                               {"top_pairs", top},
                               {"edges", edges}};
  }

  ensure_dir(out);
  write_manifest(out, "report", {{"run", args.run.string()}}, a.draws.spec.seed);
  write_json(out / "summary.json", summary);
  if (cluster_csv) write_text(out / "cluster_table.csv", *cluster_csv);
  if (metrics_csv) write_text(out / "metrics_table.csv", *metrics_csv);
  if (edges_csv) write_text(out / "edges.csv", *edges_csv);
}

}  // namespace hybasis::cli
