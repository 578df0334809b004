// End-to-end tests of the command-line tool: each case invokes the installed
// binary (path injected by the build as MEANFIELD_CLI_PATH) in a scratch
// directory and inspects its exit code and artifacts through the same
// serialization API the tool uses.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "meanfield/errors.hpp"
#include "meanfield/io.hpp"
#include "meanfield/model.hpp"
#include "meanfield/particle.hpp"
#include "meanfield/scheme.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace meanfield;

namespace {

// Fresh scratch directory per test case.
fs::path scratch_dir(const std::string &name) {
  fs::path dir = fs::temp_directory_path() / "meanfield_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the CLI with the given argument string; stdout is discarded, stderr is
// captured into <dir>/stderr.txt.  Returns the process exit code.
int run_cli(const fs::path &dir, const std::string &args) {
  std::string cmd = std::string(MEANFIELD_CLI_PATH) + " " + args + " > /dev/null 2> " +
                    (dir / "stderr.txt").string();
  int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string captured_stderr(const fs::path &dir) {
  return read_text_file(dir / "stderr.txt");
}

}  // namespace

TEST_CASE("cli rejects configs with missing keys, naming the key") {
  fs::path dir = scratch_dir("missing_key");
  json cfg = json::parse(default_config().to_json_text());
  cfg.erase("S_m");
  write_text_file(dir / "bad.json", cfg.dump());

  int rc = run_cli(dir, "simulate --config " + (dir / "bad.json").string());
  CHECK(rc == 2);
  CHECK(captured_stderr(dir).find("S_m") != std::string::npos);
}

TEST_CASE("cli simulate writes a single-plant trajectory matching the closed form") {
  fs::path dir = scratch_dir("simulate_one");
  fs::path out = dir / "traj.csv";
  int rc = run_cli(dir, "simulate --n 1 --horizon 1 --seed 7 --out " + out.string());
  CHECK(rc == 0);

  TrajectoryData traj = read_trajectory_csv(out);
  REQUIRE(traj.theta.size() == 1);
  REQUIRE(traj.history.size() == 11);  // 10 Euler steps over one day at dt = 0.1
  CHECK(traj.dt == doctest::Approx(0.1));
  const Parameters &th = traj.theta[0];
  for (std::size_t k = 0; k + 1 < traj.history.size(); ++k)
    CHECK(traj.history[k][0] < traj.history[k + 1][0]);  // isolated plant only grows
  double exact = gompertz_size(1.0, 0.3, th.S, th.gamma);
  CHECK(std::fabs(traj.history[10][0] - exact) / exact < 0.05);

  // Byte-identical re-run, and manifest hashes that match the files on disk.
  fs::path out2 = dir / "traj2.csv";
  REQUIRE(run_cli(dir, "simulate --n 1 --horizon 1 --seed 7 --out " + out2.string()) == 0);
  CHECK(read_text_file(out) == read_text_file(out2));

  json manifest = json::parse(read_text_file(dir / "traj_manifest.json"));
  CHECK(manifest["command"] == "simulate");
  CHECK(manifest["seed"] == 7);
  for (const auto &entry : manifest["outputs"]) {
    fs::path p = dir / entry["path"].get<std::string>();
    CHECK(file_hash_hex(p) == entry["hash_fnv1a64"].get<std::string>());
    CHECK(fs::file_size(p) == entry["bytes"].get<std::uintmax_t>());
  }
  ModelConfig echoed = ModelConfig::from_json_text(manifest["config"].dump());
  CHECK(echoed.seed == 7);
  CHECK(echoed.dt == default_config().dt);
}

TEST_CASE("cli mfl supports zero iterations and reproduces reports byte for byte") {
  fs::path dir = scratch_dir("mfl");

  fs::path d0 = dir / "flow0";
  REQUIRE(run_cli(dir, "mfl --m 20 --k 3 --steps 0 --out-dir " + d0.string()) == 0);
  FlowApproximation flow0 = load_flow(d0);
  CHECK(flow0.last_iteration() == 0);
  CHECK(!flow0.J[0].has_value());  // the error series starts empty
  for (double s : flow0.flow_omega[0]) CHECK(s == flow0.model.s0);

  fs::path d1 = dir / "flow1", d2 = dir / "flow2";
  REQUIRE(run_cli(dir, "mfl --m 25 --k 4 --steps 5 --seed 11 --out-dir " + d1.string()) == 0);
  REQUIRE(run_cli(dir, "mfl --m 25 --k 4 --steps 5 --seed 11 --out-dir " + d2.string()) == 0);
  CHECK(read_text_file(d1 / "scheme_report.json") == read_text_file(d2 / "scheme_report.json"));
  CHECK(file_hash_hex(d1 / "iter_0005.csv") == file_hash_hex(d2 / "iter_0005.csv"));

  json manifest = json::parse(read_text_file(d1 / "manifest.json"));
  CHECK(manifest["outputs"].size() == 7);  // report + 6 iteration snapshots
}

TEST_CASE("cli compare reports per-step distances, chaos summary and coverage errors") {
  fs::path dir = scratch_dir("compare");
  fs::path traj = dir / "traj.csv";
  fs::path flow = dir / "flow";
  REQUIRE(run_cli(dir, "simulate --n 9 --horizon 1 --seed 3 --out " + traj.string()) == 0);
  REQUIRE(run_cli(dir, "mfl --m 20 --k 4 --steps 10 --seed 3 --out-dir " + flow.string()) == 0);

  fs::path out = dir / "report.json";
  int rc = run_cli(dir, "compare --traj " + traj.string() + " --flow-dir " + flow.string() +
                            " --n-list 5,9 --reps 2 --out " + out.string());
  CHECK(rc == 0);
  json report = json::parse(read_text_file(out));
  REQUIRE(report["times"].size() == 11);
  REQUIRE(report["w1"].size() == 11);
  for (const auto &v : report["w1"]) {
    CHECK(v.get<double>() >= 0);
    CHECK(std::isfinite(v.get<double>()));
  }
  CHECK(report["chaos"]["n_values"] == json({5, 9}));
  REQUIRE(report["chaos"]["mean_discrepancy"].size() == 2);
  for (const auto &v : report["chaos"]["mean_discrepancy"]) CHECK(v.get<double>() > 0);

  // A single ensemble size yields one entry and no fitted slope.
  fs::path single = dir / "single.json";
  REQUIRE(run_cli(dir, "compare --traj " + traj.string() + " --flow-dir " + flow.string() +
                           " --n-list 7 --reps 2 --out " + single.string()) == 0);
  json one = json::parse(read_text_file(single));
  CHECK(one["chaos"]["n_values"].size() == 1);
  CHECK(one["discrepancy_slope"].is_null());

  // A trajectory extending beyond the stored flow horizon is a coverage error.
  fs::path long_traj = dir / "long.csv";
  REQUIRE(run_cli(dir, "simulate --n 4 --horizon 2 --seed 3 --out " + long_traj.string()) == 0);
  rc = run_cli(dir, "compare --traj " + long_traj.string() + " --flow-dir " + flow.string() +
                        " --out " + (dir / "x.json").string());
  CHECK(rc == 3);
  CHECK(captured_stderr(dir).find("iteration") != std::string::npos);
}

TEST_CASE("cli rates fits a negative sampling slope") {
  fs::path dir = scratch_dir("rates");
  fs::path out = dir / "rates.json";
  REQUIRE(run_cli(dir, "rates --n-list 16,32 --reps 2 --seed 5 --out " + out.string()) == 0);
  json report = json::parse(read_text_file(out));
  CHECK(report["slope"].get<double>() < 0);
  REQUIRE(report["mean_w1"].size() == 2);
  CHECK(report["mean_w1"][0].get<double>() > report["mean_w1"][1].get<double>());
}

TEST_CASE("cli bounds reports the initial distance and flags overflowed bounds") {
  fs::path dir = scratch_dir("bounds");
  fs::path out = dir / "bounds.json";
  REQUIRE(run_cli(dir, "bounds --n-list 11 --times 0.001,2 --moment-samples 5000 --out " +
                           out.string()) == 0);
  json report = json::parse(read_text_file(out));
  CHECK(report["m1"].get<double>() > 0);
  REQUIRE(report["entries"].size() == 1);
  const json &entry = report["entries"][0];
  CHECK(entry["n"] == 11);
  CHECK(entry["w1_at_0"].get<double>() > 0);
  REQUIRE(entry["bounds"].size() == 2);
  // Early bound is finite and dominates the measured initial distance; by two
  // days the double-exponential envelope has overflowed.
  CHECK(entry["bounds"][0]["bound"].get<double>() >= entry["w1_at_0"].get<double>());
  CHECK(entry["bounds"][1]["bound"] == "inf");
}

TEST_CASE("cli density writes one csv per requested time and checks coverage") {
  fs::path dir = scratch_dir("density");
  fs::path flow = dir / "flow";
  REQUIRE(run_cli(dir, "mfl --m 20 --k 4 --steps 10 --seed 9 --out-dir " + flow.string()) == 0);

  fs::path out = dir / "dens";
  int rc = run_cli(dir, "density --flow-dir " + flow.string() +
                            " --times 0.1,0.5,1 --samples 400 --out-dir " + out.string() +
                            " --emit-plotscript");
  CHECK(rc == 0);
  for (const char *stem : {"density_n0001", "density_n0005", "density_n0010"}) {
    CHECK(fs::exists(out / (std::string(stem) + ".csv")));
    json sidecar = json::parse(read_text_file(out / (std::string(stem) + ".json")));
    CHECK(sidecar["sample_count"] == 400);
  }
  CHECK(fs::exists(out / "density.gp"));

  CHECK(run_cli(dir, "density --flow-dir " + flow.string() + " --times 3 --out-dir " +
                         (dir / "x").string()) == 3);
  CHECK(run_cli(dir, "density --flow-dir " + flow.string() + " --times 0.05 --out-dir " +
                         (dir / "y").string()) == 3);  // off the iteration grid
}

TEST_CASE("cli surface emits a row-major grid deterministically") {
  fs::path dir = scratch_dir("surface");
  fs::path flow = dir / "flow";
  REQUIRE(run_cli(dir, "mfl --m 20 --k 4 --steps 10 --seed 13 --out-dir " + flow.string()) == 0);

  fs::path out = dir / "surf";
  REQUIRE(run_cli(dir, "surface --flow-dir " + flow.string() +
                           " --grid 3 --mc 8 --time 0.5 --out-dir " + out.string()) == 0);
  std::string csv = read_text_file(out / "surface.csv");
  std::size_t rows = 0;
  for (char c : csv) rows += (c == '\n');
  CHECK(rows == 10);  // header + 3 x 3 nodes
  json sidecar = json::parse(read_text_file(out / "surface.json"));
  CHECK(sidecar["iteration"] == 5);
  CHECK(sidecar["grid_size"] == 3);

  fs::path out2 = dir / "surf2";
  REQUIRE(run_cli(dir, "surface --flow-dir " + flow.string() +
                           " --grid 3 --mc 8 --time 0.5 --out-dir " + out2.string()) == 0);
  CHECK(read_text_file(out2 / "surface.csv") == csv);
}

TEST_CASE("cli constants evaluates the growth constants of the reference config") {
  fs::path dir = scratch_dir("constants");
  fs::path out = dir / "constants.json";
  REQUIRE(run_cli(dir, "constants --out " + out.string()) == 0);
  json report = json::parse(read_text_file(out));
  CHECK(report["K1"].get<double>() == doctest::Approx(std::log(20.0)).epsilon(1e-15));
  CHECK(report["K24"].get<double>() ==
        doctest::Approx(report["K2"].get<double>() + report["K4"].get<double>()).epsilon(1e-15));
  LipschitzConstants k = theory_constants(default_config());
  CHECK(report["K4"].get<double>() == k.K4);
}

TEST_CASE("cli exit codes distinguish flag, numerical and coverage failures") {
  fs::path dir = scratch_dir("exit_codes");

  CHECK(run_cli(dir, "simulate --no-such-flag") == 2);
  CHECK(run_cli(dir, "compare --out x.json") == 2);  // missing required --traj/--flow-dir

  json cfg = json::parse(default_config().to_json_text());
  cfg["dt"] = 1e4;  // valid config, explosive step size
  write_text_file(dir / "blowup.json", cfg.dump());
  int rc = run_cli(dir, "mfl --config " + (dir / "blowup.json").string() +
                            " --m 20 --k 3 --steps 3 --out-dir " + (dir / "f").string());
  CHECK(rc == 4);
  CHECK(captured_stderr(dir).find("iteration") != std::string::npos);
}
