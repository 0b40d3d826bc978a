#include "hybasis_cli/cli.hpp"

#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "hybasis/errors.hpp"

namespace hybasis::cli {
namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Lookup: return 2;
    case ErrorKind::Numerical: return 3;
    case ErrorKind::Io:
    case ErrorKind::Validation: return 4;
  }
  return 1;
}

void add_threads(CLI::App* app, int& threads) {
  app->add_option("--threads", threads, "Worker cap (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Composite-hybrid basis Bayesian regression for task fMRI"};
  app.set_config("--config", "", "TOML config file; [section] names select the subcommand");
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Generate synthetic datasets with known truth");
  s->add_option("--regime", sim.regime, "activation or null")->capture_default_str();
  s->add_option("--replicates", sim.replicates, "Number of datasets")->capture_default_str();
  s->add_option("--seed", sim.seed, "Seed of the first replicate (replicate r uses seed + r)")->capture_default_str();
  s->add_option("--out", sim.out, "Output directory")->required();
  s->add_option("--noise", sim.noise, "short-range or long-range")->capture_default_str();
  s->add_option("--temporal", sim.temporal, "iid or ar2")->capture_default_str();
  s->add_option("--kappa0", sim.kappa0)->capture_default_str();
  s->add_option("--kappa1", sim.kappa1)->capture_default_str();
  s->add_option("--kappa2", sim.kappa2)->capture_default_str();
  s->add_option("--n-time", sim.n_time, "Frames per run")->capture_default_str();
  s->add_option("--dims", sim.dims, "Grid extent X Y Z")->expected(3);
  s->add_option("--tr", sim.tr, "Seconds per frame")->capture_default_str();
  s->add_option("--baseline", sim.baseline, "cosine, zero or file")->capture_default_str();
  s->add_option("--baseline-file", sim.baseline_file, "Baseline volume for --baseline file");
  s->add_option("--baseline-amplitude", sim.baseline_amplitude)->capture_default_str();
  s->add_option("--null-scale", sim.null_scale, "Noise scale in the null regime")->capture_default_str();
  add_threads(s, sim.threads);

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit the basis-space model and write the draws archive");
  f->add_option("--volume", fit.volume, "Input .vol.json")->required();
  f->add_option("--parcellation", fit.parcellation, "Input .parc.json (CHSB, LSB)");
  f->add_option("--events", fit.events, "condition,onset,duration CSV")->required();
  f->add_option("--tr", fit.tr, "Seconds per frame")->required();
  f->add_flag("--derivative", fit.derivative, "Add HRF time-derivative columns");
  f->add_option("--mode", fit.mode, "CHSB, LSB, GSB or NSB")->capture_default_str();
  f->add_option("--al", fit.al, "Local variance threshold")->capture_default_str();
  f->add_option("--ag", fit.ag, "Global variance threshold")->capture_default_str();
  f->add_option("--wavelet", fit.wavelet, "haar, d4, d6 or d8")->capture_default_str();
  f->add_option("--levels", fit.levels, "Decomposition levels (0 = automatic)")->capture_default_str();
  f->add_option("--iters", fit.iters)->capture_default_str();
  f->add_option("--burnin", fit.burnin)->capture_default_str();
  f->add_option("--thin", fit.thin)->capture_default_str();
  f->add_option("--kv", fit.kv, "Prior scale k_v")->capture_default_str();
  f->add_option("--a0", fit.a0)->capture_default_str();
  f->add_option("--b0", fit.b0)->capture_default_str();
  f->add_option("--seed", fit.seed)->capture_default_str();
  f->add_option("--min-roi-size", fit.min_roi_size)->capture_default_str();
  f->add_option("--out", fit.out, "Run directory")->required();
  add_threads(f, fit.threads);

  ContrastArgs con;
  auto* c = app.add_subcommand("contrast", "Joint credible bands, P_SimBas and clusters for a contrast");
  c->add_option("--run", con.run, "Run directory written by fit")->required();
  c->add_option("--preset", con.preset, "faces-vs-places or stim1-vs-stim2");
  c->add_option("--weights", con.weights, "Comma separated weights over design columns");
  c->add_option("--alpha", con.alpha)->capture_default_str();
  c->add_option("--connectivity", con.connectivity, "Cluster adjacency: 6, 18 or 26")->capture_default_str();
  c->add_option("--min-cluster", con.min_cluster, "Smallest reported cluster")->capture_default_str();
  c->add_option("--truth", con.truth, "Simulation .truth.json for metrics");
  c->add_option("--out", con.out, "Output directory (default <run>/contrast)");
  add_threads(c, con.threads);

  ConnectivityArgs conn;
  auto* k = app.add_subcommand("connectivity", "ROI background connectivity (sqrt RV)");
  k->add_option("--run", conn.run, "Run directory written by fit")->required();
  k->add_option("--threshold", conn.threshold, "Strong edge threshold")->capture_default_str();
  k->add_option("--mode-estimator", conn.mode_estimator, "histogram or median")->capture_default_str();
  k->add_option("--denominator", conn.denominator, "components or voxels")->capture_default_str();
  k->add_option("--draw-stride", conn.draw_stride, "Per-draw matrices every n draws (0 = off)")
      ->capture_default_str();
  k->add_option("--out", conn.out, "Output directory (default <run>/connectivity)");
  add_threads(k, conn.threads);

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Summary tables regenerated from a run's archives");
  r->add_option("--run", rep.run, "Run directory written by fit")->required();
  r->add_option("--out", rep.out, "Output directory (default <run>/report)");
  add_threads(r, rep.threads);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (s->parsed()) cmd_simulate(sim);
    else if (f->parsed()) cmd_fit(fit);
    else if (c->parsed()) cmd_contrast(con);
    else if (k->parsed()) cmd_connectivity(conn);
    else if (r->parsed()) cmd_report(rep);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace hybasis::cli
