#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "meanfield/density.hpp"
#include "meanfield/particle.hpp"
#include "meanfield/scheme.hpp"

namespace meanfield {

inline constexpr const char *kToolVersion = "0.1.0";

// Shortest text that round-trips the double exactly ("%.17g" trimmed).
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, const std::string &text);

// FNV-1a 64 content hash of a file, as 16 hex digits.
std::string file_hash_hex(const std::filesystem::path &path);

// Trajectory CSV: header step,time_day,plant_id,s_m_units,x,y,S,gamma and one
// row per (recorded step, plant).
std::string trajectory_csv(const ParticleEnsemble &ensemble);

// Per-run report for a simulation: seed, N, dt, step count, warnings, wall time.
std::string run_report_json(const ParticleEnsemble &ensemble, std::uint64_t seed,
                            double wall_seconds);

// Reads a trajectory CSV back (sizes per step plus static parameters).
struct TrajectoryData {
  double dt = 0;  // recovered from the time column
  std::vector<Parameters> theta;
  std::vector<std::vector<double>> history;  // [step][plant]
};
TrajectoryData read_trajectory_csv(const std::filesystem::path &path);

// Flow snapshot directory: iter_%04d.csv per iteration with columns
// theta_x,theta_y,theta_S,theta_gamma,s_value,set_label (omega rows first,
// then train, then test) plus scheme_report.json carrying both configs, the
// polynomial coefficients, GP weights and the J / J_poly series.
void save_flow(const FlowApproximation &flow, const std::filesystem::path &dir);
FlowApproximation load_flow(const std::filesystem::path &dir);
std::string scheme_report_json(const FlowApproximation &flow);

// Density CSV (header s,density) plus sidecar JSON with iteration, time,
// bandwidth, sample count and clip count.
std::string density_csv(const DensityEstimate &d);
std::string density_sidecar_json(const SnapshotDensity &snap, std::size_t sample_count);

// Surface CSV: header x,y,e_n; rows in row-major grid order.
std::string surface_csv(const ExpectationSurface &surface);

// Generic gnuplot scripts referencing already-written CSV files.
std::string density_plotscript(const std::vector<std::string> &csv_names);
std::string surface_plotscript(const std::string &csv_name, std::size_t grid_size);

// Run manifest: command, resolved config, master seed and derived sub-stream
// labels, tool version, ISO-8601 timestamps, and (path, bytes, hash) for
// every output file.  Re-running a command with the manifest's config and
// seed reproduces the hashes.
struct RunManifest {
  std::string command;
  std::string config_json;  // resolved ModelConfig (and scheme fields if any)
  std::uint64_t seed = 0;
  std::vector<std::string> streams;  // sub-stream labels consumed by the run
  std::string started, finished;     // UTC timestamps
  std::vector<std::filesystem::path> outputs;
};
std::string manifest_json(const RunManifest &manifest);
void write_manifest(const RunManifest &manifest, const std::filesystem::path &path);

std::string utc_timestamp_now();

}  // namespace meanfield
