// Command-line front end: wires configuration files, seeds and the library
// modules into reproducible runs.  Every command writes its primary artifact
// plus a manifest listing (path, bytes, content hash) for each output, so a
// run can be replayed and checked byte for byte.
//
// Exit codes: 0 success, 2 configuration/validation error, 3 input-coverage
// error, 4 numerical failure.

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "meanfield/density.hpp"
#include "meanfield/errors.hpp"
#include "meanfield/io.hpp"
#include "meanfield/model.hpp"
#include "meanfield/particle.hpp"
#include "meanfield/rng.hpp"
#include "meanfield/scheme.hpp"
#include "meanfield/transport.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

using namespace meanfield;

double wall_seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ModelConfig load_model_config(const std::string &path) {
  if (path.empty()) return default_config();
  return ModelConfig::from_json_text(read_text_file(path));
}

std::vector<std::size_t> parse_size_list(const std::string &text) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos
                                                                   : comma - pos);
    try {
      std::size_t used = 0;
      long long v = std::stoll(item, &used);
      if (used != item.size() || v <= 0)
        throw ConfigError("list entry \"" + item + "\" is not a positive integer");
      out.push_back(static_cast<std::size_t>(v));
    } catch (const ConfigError &) {
      throw;
    } catch (const std::exception &) {
      throw ConfigError("list entry \"" + item + "\" is not a positive integer");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("expected a non-empty comma-separated list");
  return out;
}

std::vector<double> parse_time_list(const std::string &text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos
                                                                   : comma - pos);
    try {
      std::size_t used = 0;
      double v = std::stod(item, &used);
      if (used != item.size() || !std::isfinite(v) || v < 0)
        throw ConfigError("time entry \"" + item + "\" is not a finite non-negative number");
      out.push_back(v);
    } catch (const ConfigError &) {
      throw;
    } catch (const std::exception &) {
      throw ConfigError("time entry \"" + item + "\" is not a finite non-negative number");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("expected a non-empty comma-separated list of times");
  return out;
}

// Maps a time in days onto a stored flow iteration; the time must land on the
// iteration grid (within 1e-9 days) and inside the stored horizon.
std::size_t iteration_for_time(const FlowApproximation &flow, double t_days) {
  char buf[160];
  double dt = flow.model.dt;
  long long n = std::llround(t_days / dt);
  if (n < 0 || std::fabs(static_cast<double>(n) * dt - t_days) > 1e-9) {
    std::snprintf(buf, sizeof buf,
                  "time %.17g days does not land on the stored iteration grid (dt = %.17g)",
                  t_days, dt);
    throw CoverageError(buf);
  }
  auto idx = static_cast<std::size_t>(n);
  if (idx > flow.last_iteration()) {
    std::snprintf(buf, sizeof buf,
                  "time %.17g days (iteration %lld) is beyond the stored flow horizon "
                  "(last iteration %zu)",
                  t_days, n, flow.last_iteration());
    throw CoverageError(buf);
  }
  return idx;
}

fs::path sibling_path(const fs::path &primary, const char *suffix) {
  fs::path p = primary;
  p.replace_filename(primary.stem().string() + suffix);
  return p;
}

void ensure_parent(const fs::path &p) {
  fs::path dir = p.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
}

// Accumulates output files for the manifest as they are written.
struct Run {
  RunManifest manifest;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  Run(std::string command, std::string config_json, std::uint64_t seed,
      std::vector<std::string> streams) {
    manifest.command = std::move(command);
    manifest.config_json = std::move(config_json);
    manifest.seed = seed;
    manifest.streams = std::move(streams);
    manifest.started = utc_timestamp_now();
  }

  void emit(const fs::path &path, const std::string &text) {
    ensure_parent(path);
    write_text_file(path, text);
    manifest.outputs.push_back(path);
  }

  void record(const fs::path &path) { manifest.outputs.push_back(path); }

  void finish(const fs::path &manifest_path) {
    manifest.finished = utc_timestamp_now();
    ensure_parent(manifest_path);
    write_manifest(manifest, manifest_path);
    std::printf("wrote %s (%zu output file%s)\n", manifest_path.string().c_str(),
                manifest.outputs.size(), manifest.outputs.size() == 1 ? "" : "s");
  }
};

// JSON value for a possibly infinite bound (JSON has no infinity literal).
ordered_json finite_or_inf(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOpts {
  std::string config;
  std::size_t n = 100;
  double horizon = 10.0;
  std::optional<std::uint64_t> seed;
  std::string out = "trajectory.csv";
};

void run_simulate(const SimulateOpts &o) {
  ModelConfig cfg = load_model_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  if (o.n == 0) throw ConfigError("--n must be at least 1");
  if (!(o.horizon >= 0) || !std::isfinite(o.horizon))
    throw ConfigError("--horizon must be a finite non-negative number of days");

  Run run("simulate", cfg.to_json_text(), cfg.seed, {"initial-ensemble"});
  RngStream rng = RngStream::substream(cfg.seed, "initial-ensemble");
  ParticleEnsemble ensemble = simulate(cfg, o.n, o.horizon, rng);

  fs::path out = o.out;
  run.emit(out, trajectory_csv(ensemble));
  run.emit(sibling_path(out, "_report.json"),
           run_report_json(ensemble, cfg.seed, wall_seconds_since(run.t0)));
  run.finish(sibling_path(out, "_manifest.json"));
}

// ---------------------------------------------------------------------------
// mfl
// ---------------------------------------------------------------------------

struct MflOpts {
  std::string config;
  std::size_t m = 1000;
  std::size_t k = 100;
  std::size_t steps = 100;
  double jitter = 1e-8;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "flow";
};

void run_mfl(const MflOpts &o) {
  ModelConfig cfg = load_model_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();

  SchemeConfig scheme;
  scheme.ensemble_size = o.m;
  scheme.train_size = o.k;
  scheme.iterations = o.steps;
  scheme.jitter = o.jitter;
  scheme.seed = cfg.seed;
  scheme.validate();

  Run run("mfl", cfg.to_json_text(), cfg.seed, {"omega-sample", "train-set", "test-set"});
  FlowApproximation flow = run_scheme(cfg, scheme);

  fs::path dir = o.out_dir;
  save_flow(flow, dir);
  run.record(dir / "scheme_report.json");
  char name[32];
  for (std::size_t n = 0; n <= flow.last_iteration(); ++n) {
    std::snprintf(name, sizeof name, "iter_%04zu.csv", n);
    run.record(dir / name);
  }
  run.finish(dir / "manifest.json");
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareOpts {
  std::string traj;
  std::string flow_dir;
  std::string n_list = "11,51,101";
  std::size_t reps = 20;
  std::optional<std::uint64_t> seed;
  std::string out = "transport_report.json";
};

void run_compare(const CompareOpts &o) {
  FlowApproximation flow = load_flow(o.flow_dir);
  TrajectoryData traj = read_trajectory_csv(o.traj);
  const ModelConfig &cfg = flow.model;
  std::uint64_t seed = o.seed ? *o.seed : cfg.seed;
  std::vector<std::size_t> n_values = parse_size_list(o.n_list);
  if (o.reps == 0) throw ConfigError("--reps must be at least 1");

  std::size_t n_steps = traj.history.size() - 1;
  if (n_steps >= 1 && std::fabs(traj.dt - cfg.dt) > 1e-9) {
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "trajectory time step %.17g does not match the flow time step %.17g",
                  traj.dt, cfg.dt);
    throw ConfigError(buf);
  }
  if (n_steps > flow.last_iteration()) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "trajectory has %zu steps but the stored flow ends at iteration %zu",
                  n_steps, flow.last_iteration());
    throw CoverageError(buf);
  }
  std::size_t n_plants = traj.theta.size();

  Run run("compare", cfg.to_json_text(), seed,
          {"reference-cloud", "chaos-lead", "chaos"});

  // W1 between the trajectory's empirical measure and an equal-size sample of
  // the reconstructed limit, at every recorded step.  The limit-side
  // parameters are drawn once and pushed through the flow at each step.
  Interaction g = model_interaction(cfg);
  RngStream ref_rng = RngStream::substream(seed, "reference-cloud");
  std::vector<Parameters> ref_theta(n_plants);
  for (auto &th : ref_theta) th = sample_parameters(cfg, ref_rng);

  std::vector<double> times(n_steps + 1), w1(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k) {
    PointCloud limit;
    limit.points.reserve(n_plants);
    for (const Parameters &th : ref_theta) {
      double s = gp_reconstruct(th, flow, k, g);
      if (!(s > 0) || !std::isfinite(s)) {
        char buf[96];
        std::snprintf(buf, sizeof buf,
                      "reconstructed size %.17g at iteration %zu is not positive", s, k);
        throw NumericalError(buf);
      }
      limit.points.push_back({std::log(s / cfg.s_m), Coordinate::LogSize, th});
    }
    PointCloud emp;
    emp.points.reserve(n_plants);
    for (std::size_t i = 0; i < n_plants; ++i) {
      double s = traj.history[k][i];
      if (!(s > 0) || !std::isfinite(s)) {
        char buf[96];
        std::snprintf(buf, sizeof buf,
                      "trajectory size %.17g (step %zu) is not positive", s, k);
        throw NumericalError(buf);
      }
      emp.points.push_back({std::log(s / cfg.s_m), Coordinate::LogSize, traj.theta[i]});
    }
    times[k] = static_cast<double>(k) * cfg.dt;
    w1[k] = w1_exact(emp, limit, cfg);
  }

  double t_final = static_cast<double>(n_steps) * cfg.dt;
  ChaosResult chaos = chaos_propagation_test(flow, n_values, t_final, o.reps, seed);

  ordered_json report;
  report["version"] = kToolVersion;
  report["seed"] = seed;
  report["n_plants"] = n_plants;
  report["reps"] = o.reps;
  report["times"] = times;
  report["w1"] = w1;
  ordered_json cj;
  cj["t_days"] = chaos.t_days;
  cj["n_values"] = chaos.n_values;
  cj["mean_discrepancy"] = chaos.mean_discrepancy;
  ordered_json corr = ordered_json::array();
  for (const auto &c : chaos.pair_correlation)
    corr.push_back(c ? ordered_json(*c) : ordered_json(nullptr));
  cj["pair_correlation"] = corr;
  cj["focal"] = {{"x", chaos.focal.x},
                 {"y", chaos.focal.y},
                 {"S", chaos.focal.S},
                 {"gamma", chaos.focal.gamma}};
  report["chaos"] = cj;

  bool can_fit = chaos.n_values.size() >= 2;
  for (double d : chaos.mean_discrepancy)
    if (!(d > 0)) can_fit = false;
  if (can_fit) {
    std::vector<double> xs(chaos.n_values.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
      xs[i] = static_cast<double>(chaos.n_values[i]);
    auto [slope, stderr_] = fit_loglog_slope(xs, chaos.mean_discrepancy);
    report["discrepancy_slope"] = slope;
    report["discrepancy_slope_stderr"] = stderr_;
  } else {
    report["discrepancy_slope"] = nullptr;
    report["discrepancy_slope_stderr"] = nullptr;
  }

  fs::path out = o.out;
  run.emit(out, report.dump(2) + "\n");
  run.finish(sibling_path(out, "_manifest.json"));
}

// ---------------------------------------------------------------------------
// rates
// ---------------------------------------------------------------------------

struct RatesOpts {
  std::string config;
  std::string n_list = "64,128,256,512,1024";
  std::size_t reps = 10;
  std::optional<std::uint64_t> seed;
  std::string out = "rates.json";
};

void run_rates(const RatesOpts &o) {
  ModelConfig cfg = load_model_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  std::vector<std::size_t> sizes = parse_size_list(o.n_list);
  if (sizes.size() < 2) throw ConfigError("--n-list needs at least two sizes to fit a rate");
  if (o.reps == 0) throw ConfigError("--reps must be at least 1");

  Run run("rates", cfg.to_json_text(), cfg.seed, {"rate"});
  RateExperiment exp = dudley_rate_experiment(cfg, sizes, o.reps, cfg.seed);

  ordered_json report;
  report["version"] = kToolVersion;
  report["seed"] = cfg.seed;
  report["reps"] = o.reps;
  report["sizes"] = exp.sizes;
  report["mean_w1"] = exp.mean_w1;
  report["slope"] = exp.slope;
  report["slope_stderr"] = exp.slope_stderr;

  fs::path out = o.out;
  run.emit(out, report.dump(2) + "\n");
  run.finish(sibling_path(out, "_manifest.json"));
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

struct BoundsOpts {
  std::string config;
  std::string n_list = "11,101";
  std::string times = "0.5,1,2";
  std::size_t moment_samples = 100000;
  std::optional<std::uint64_t> seed;
  std::string out = "bounds.json";
};

void run_bounds(const BoundsOpts &o) {
  ModelConfig cfg = load_model_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  std::vector<std::size_t> n_values = parse_size_list(o.n_list);
  std::vector<double> times = parse_time_list(o.times);
  if (o.moment_samples == 0) throw ConfigError("--moment-samples must be at least 1");
  for (std::size_t n : n_values)
    if (n < 2) throw ConfigError("--n-list entries must be at least 2 (the bound has a 1/(N-1) term)");

  Run run("bounds", cfg.to_json_text(), cfg.seed,
          {"moments-oracle", "initial-ensemble", "reference-cloud"});

  RngStream moment_rng = RngStream::substream(cfg.seed, "moments-oracle");
  PointCloud moment_cloud = initial_cloud(cfg, o.moment_samples, moment_rng);
  auto [m1, m2] = moments(moment_cloud, cfg);
  double r0 = support_radius(cfg);
  LipschitzConstants k = theory_constants(cfg);

  ordered_json entries = ordered_json::array();
  for (std::size_t n : n_values) {
    RngStream ens_rng = RngStream::substream(cfg.seed, "initial-ensemble", n);
    RngStream ref_rng = RngStream::substream(cfg.seed, "reference-cloud", n);
    PointCloud ensemble0 = initial_cloud(cfg, n, ens_rng);
    PointCloud reference0 = initial_cloud(cfg, n, ref_rng);
    double w1_0 = w1_exact(ensemble0, reference0, cfg);

    ordered_json per_time = ordered_json::array();
    for (double t : times) {
      double b = dobrushin_bound(t, cfg, m1, m2, r0, w1_0, n);
      per_time.push_back({{"t_days", t}, {"bound", finite_or_inf(b)}});
    }
    entries.push_back({{"n", n}, {"w1_at_0", w1_0}, {"bounds", per_time}});
  }

  ordered_json report;
  report["version"] = kToolVersion;
  report["seed"] = cfg.seed;
  report["moment_samples"] = o.moment_samples;
  report["m1"] = m1;
  report["m2"] = m2;
  report["support_radius"] = r0;
  report["constants"] = {{"K1", k.K1}, {"K2", k.K2}, {"K3", k.K3}, {"K4", k.K4}, {"K24", k.K24}};
  report["entries"] = entries;

  fs::path out = o.out;
  run.emit(out, report.dump(2) + "\n");
  run.finish(sibling_path(out, "_manifest.json"));
}

// ---------------------------------------------------------------------------
// density
// ---------------------------------------------------------------------------

struct DensityOpts {
  std::string flow_dir;
  std::string times = "1,5,10";
  std::size_t samples = 10000;
  double bandwidth = 0;  // <= 0: default count^(-2/5)
  std::string out_dir = "density";
  bool emit_plotscript = false;
};

void run_density(const DensityOpts &o) {
  FlowApproximation flow = load_flow(o.flow_dir);
  std::vector<double> times = parse_time_list(o.times);
  std::vector<std::size_t> iterations;
  iterations.reserve(times.size());
  for (double t : times) iterations.push_back(iteration_for_time(flow, t));
  if (o.samples == 0) throw ConfigError("--samples must be at least 1");

  Run run("density", flow.model.to_json_text(), flow.scheme.seed, {"density-sample"});
  std::vector<SnapshotDensity> snaps =
      size_marginal_snapshots(flow, iterations, o.samples, o.bandwidth);

  fs::path dir = o.out_dir;
  std::vector<std::string> csv_names;
  char name[48];
  for (const SnapshotDensity &snap : snaps) {
    std::snprintf(name, sizeof name, "density_n%04zu.csv", snap.iteration);
    csv_names.emplace_back(name);
    run.emit(dir / name, density_csv(snap.density));
    std::snprintf(name, sizeof name, "density_n%04zu.json", snap.iteration);
    run.emit(dir / name, density_sidecar_json(snap, o.samples));
  }
  if (o.emit_plotscript) run.emit(dir / "density.gp", density_plotscript(csv_names));
  run.finish(dir / "manifest.json");
}

// ---------------------------------------------------------------------------
// surface
// ---------------------------------------------------------------------------

struct SurfaceOpts {
  std::string flow_dir;
  std::optional<double> time_days;  // default: last stored iteration
  std::size_t grid = 50;
  std::size_t mc = 1000;
  std::string out_dir = "surface";
  bool emit_plotscript = false;
};

void run_surface(const SurfaceOpts &o) {
  FlowApproximation flow = load_flow(o.flow_dir);
  std::size_t n = o.time_days ? iteration_for_time(flow, *o.time_days) : flow.last_iteration();

  Run run("surface", flow.model.to_json_text(), flow.scheme.seed,
          {"marginalization-u", "marginalization-uprime"});
  ExpectationSurface surface = expectation_surface(flow, n, o.grid, o.mc);

  fs::path dir = o.out_dir;
  run.emit(dir / "surface.csv", surface_csv(surface));
  ordered_json sidecar;
  sidecar["version"] = kToolVersion;
  sidecar["iteration"] = surface.iteration;
  sidecar["t_days"] = static_cast<double>(surface.iteration) * flow.model.dt;
  sidecar["grid_size"] = surface.grid_size;
  sidecar["mc_count"] = surface.mc_count;
  run.emit(dir / "surface.json", sidecar.dump(2) + "\n");
  if (o.emit_plotscript)
    run.emit(dir / "surface.gp", surface_plotscript("surface.csv", surface.grid_size));
  run.finish(dir / "manifest.json");
}

// ---------------------------------------------------------------------------
// constants
// ---------------------------------------------------------------------------

struct ConstantsOpts {
  std::string config;
  std::string out = "constants.json";
};

void run_constants(const ConstantsOpts &o) {
  ModelConfig cfg = load_model_config(o.config);
  cfg.validate();

  Run run("constants", cfg.to_json_text(), cfg.seed, {});
  LipschitzConstants k = theory_constants(cfg);

  ordered_json report;
  report["version"] = kToolVersion;
  report["K1"] = k.K1;
  report["K2"] = k.K2;
  report["K3"] = k.K3;
  report["K4"] = k.K4;
  report["K24"] = k.K24;
  report["support_radius"] = support_radius(cfg);
  report["r0_initial"] = std::log(cfg.s0 / cfg.s_m);
  report["config"] = ordered_json::parse(cfg.to_json_text());

  fs::path out = o.out;
  run.emit(out, report.dump(2) + "\n");
  run.finish(sibling_path(out, "_manifest.json"));
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Plant-competition mean-field toolkit: particle simulation, "
               "characteristic-flow approximation, and transport diagnostics"};
  app.require_subcommand(1);

  SimulateOpts sim;
  CLI::App *c_sim = app.add_subcommand("simulate", "Run the N-plant interacting ensemble");
  c_sim->add_option("--config", sim.config, "Model config JSON (default: built-in reference)");
  c_sim->add_option("--n", sim.n, "Number of plants");
  c_sim->add_option("--horizon", sim.horizon, "Horizon in days");
  c_sim->add_option("--seed", sim.seed, "Master seed (overrides the config)");
  c_sim->add_option("--out", sim.out, "Trajectory CSV path");
  c_sim->callback([&] { run_simulate(sim); });

  MflOpts mfl;
  CLI::App *c_mfl = app.add_subcommand("mfl", "Run the mean-field characteristic-flow scheme");
  c_mfl->add_option("--config", mfl.config, "Model config JSON (default: built-in reference)");
  c_mfl->add_option("--m", mfl.m, "Interior sample size M");
  c_mfl->add_option("--k", mfl.k, "Training / test set size K");
  c_mfl->add_option("--steps", mfl.steps, "Number of flow iterations");
  c_mfl->add_option("--jitter", mfl.jitter, "Relative diagonal jitter of the kernel solve");
  c_mfl->add_option("--seed", mfl.seed, "Master seed (overrides the config)");
  c_mfl->add_option("--out-dir", mfl.out_dir, "Output directory for snapshots and report");
  c_mfl->callback([&] { run_mfl(mfl); });

  CompareOpts cmp;
  CLI::App *c_cmp = app.add_subcommand(
      "compare", "Transport distance between a particle trajectory and a stored flow");
  c_cmp->add_option("--traj", cmp.traj, "Trajectory CSV from `simulate`")->required();
  c_cmp->add_option("--flow-dir", cmp.flow_dir, "Flow directory from `mfl`")->required();
  c_cmp->add_option("--n-list", cmp.n_list, "Ensemble sizes for the chaos experiment");
  c_cmp->add_option("--reps", cmp.reps, "Repetitions per ensemble size");
  c_cmp->add_option("--seed", cmp.seed, "Experiment seed (default: the flow's seed)");
  c_cmp->add_option("--out", cmp.out, "Report JSON path");
  c_cmp->callback([&] { run_compare(cmp); });

  RatesOpts rates;
  CLI::App *c_rates = app.add_subcommand("rates", "Two-sample W1 sampling-rate experiment");
  c_rates->add_option("--config", rates.config, "Model config JSON (default: built-in reference)");
  c_rates->add_option("--n-list", rates.n_list, "Cloud sizes");
  c_rates->add_option("--reps", rates.reps, "Repetitions per size");
  c_rates->add_option("--seed", rates.seed, "Master seed (overrides the config)");
  c_rates->add_option("--out", rates.out, "Report JSON path");
  c_rates->callback([&] { run_rates(rates); });

  BoundsOpts bounds;
  CLI::App *c_bounds = app.add_subcommand("bounds", "Stability (Dobrushin-type) bound evaluation");
  c_bounds->add_option("--config", bounds.config, "Model config JSON (default: built-in reference)");
  c_bounds->add_option("--n-list", bounds.n_list, "Ensemble sizes");
  c_bounds->add_option("--times", bounds.times, "Times in days, comma-separated");
  c_bounds->add_option("--moment-samples", bounds.moment_samples,
                       "Sample size for the initial-law moments");
  c_bounds->add_option("--seed", bounds.seed, "Master seed (overrides the config)");
  c_bounds->add_option("--out", bounds.out, "Report JSON path");
  c_bounds->callback([&] { run_bounds(bounds); });

  DensityOpts density;
  CLI::App *c_density = app.add_subcommand("density", "Size-marginal density snapshots of a stored flow");
  c_density->add_option("--flow-dir", density.flow_dir, "Flow directory from `mfl`")->required();
  c_density->add_option("--times", density.times, "Times in days, comma-separated");
  c_density->add_option("--samples", density.samples, "Parameter sample size");
  c_density->add_option("--bandwidth", density.bandwidth,
                        "Beta-kernel bandwidth (<= 0: default count^(-2/5))");
  c_density->add_option("--out-dir", density.out_dir, "Output directory");
  c_density->add_flag("--emit-plotscript", density.emit_plotscript, "Also write a gnuplot script");
  c_density->callback([&] { run_density(density); });

  SurfaceOpts surface;
  CLI::App *c_surface = app.add_subcommand("surface", "Expected-size surface over the habitat");
  c_surface->add_option("--flow-dir", surface.flow_dir, "Flow directory from `mfl`")->required();
  c_surface->add_option("--time", surface.time_days, "Time in days (default: last iteration)");
  c_surface->add_option("--grid", surface.grid, "Grid size G (G x G nodes)");
  c_surface->add_option("--mc", surface.mc, "Monte Carlo draws per node");
  c_surface->add_option("--out-dir", surface.out_dir, "Output directory");
  c_surface->add_flag("--emit-plotscript", surface.emit_plotscript, "Also write a gnuplot script");
  c_surface->callback([&] { run_surface(surface); });

  ConstantsOpts constants;
  CLI::App *c_const = app.add_subcommand("constants", "Growth/stability constants of a config");
  c_const->add_option("--config", constants.config, "Model config JSON (default: built-in reference)");
  c_const->add_option("--out", constants.out, "Report JSON path");
  c_const->callback([&] { run_constants(constants); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const meanfield::ConfigError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const meanfield::CoverageError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const meanfield::NumericalError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
