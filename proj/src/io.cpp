#include "meanfield/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "meanfield/errors.hpp"
#include "meanfield/rng.hpp"

namespace meanfield {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_double(const std::string &text, const char *what) {
  char *end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || (end && *end != '\0' && *end != '\r'))
    throw ConfigError(std::string("malformed number in ") + what + ": '" + text + "'");
  return v;
}

json poly_to_json(const PolyCoeffs &p) {
  json out;
  out["a"] = p.a;
  out["b"] = p.b;
  out["c"] = p.c;
  return out;
}

PolyCoeffs poly_from_json(const json &j) {
  PolyCoeffs p;
  p.a = j.at("a").get<double>();
  const auto b = j.at("b").get<std::vector<double>>();
  const auto c = j.at("c").get<std::vector<double>>();
  if (b.size() != 4 || c.size() != 16)
    throw ConfigError("flow snapshot: malformed polynomial coefficients");
  std::copy(b.begin(), b.end(), p.b.begin());
  std::copy(c.begin(), c.end(), p.c.begin());
  return p;
}

double vector_norm(const std::vector<double> &v) {
  double acc = 0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

std::filesystem::path iteration_csv_path(const std::filesystem::path &dir, std::size_t n) {
  char name[32];
  std::snprintf(name, sizeof name, "iter_%04zu.csv", n);
  return dir / name;
}

void append_flow_rows(std::string &csv, const std::vector<Parameters> &theta,
                      const std::vector<double> &flow, const char *label) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    csv += format_double(theta[i].x);
    csv += ',';
    csv += format_double(theta[i].y);
    csv += ',';
    csv += format_double(theta[i].S);
    csv += ',';
    csv += format_double(theta[i].gamma);
    csv += ',';
    csv += format_double(flow[i]);
    csv += ',';
    csv += label;
    csv += '\n';
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;  // nan: never equal to itself, printed at full precision
}

std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file: " + path.string());
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

void write_text_file(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("short write: " + path.string());
}

std::string file_hash_hex(const std::filesystem::path &path) {
  const std::string body = read_text_file(path);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(body)));
  return buf;
}

std::string trajectory_csv(const ParticleEnsemble &ensemble) {
  std::string csv = "step,time_day,plant_id,s_m_units,x,y,S,gamma\n";
  for (std::size_t k = 0; k < ensemble.history.size(); ++k) {
    const double t = static_cast<double>(k) * ensemble.cfg.dt;
    for (std::size_t i = 0; i < ensemble.count(); ++i) {
      csv += std::to_string(k);
      csv += ',';
      csv += format_double(t);
      csv += ',';
      csv += std::to_string(i);
      csv += ',';
      csv += format_double(ensemble.history[k][i]);
      csv += ',';
      csv += format_double(ensemble.theta[i].x);
      csv += ',';
      csv += format_double(ensemble.theta[i].y);
      csv += ',';
      csv += format_double(ensemble.theta[i].S);
      csv += ',';
      csv += format_double(ensemble.theta[i].gamma);
      csv += '\n';
    }
  }
  return csv;
}

std::string run_report_json(const ParticleEnsemble &ensemble, std::uint64_t seed,
                            double wall_seconds) {
  ordered_json report;
  report["version"] = kToolVersion;
  report["seed"] = seed;
  report["plants"] = ensemble.count();
  report["dt"] = ensemble.cfg.dt;
  report["steps"] = ensemble.history.empty() ? 0 : ensemble.history.size() - 1;
  ordered_json warnings = ordered_json::array();
  for (const StepWarning &w : ensemble.warnings) {
    ordered_json entry;
    entry["kind"] = to_string(w.kind);
    entry["step"] = w.step;
    entry["particle"] = w.particle;
    entry["value"] = w.value;
    warnings.push_back(entry);
  }
  report["warnings"] = warnings;
  report["wall_seconds"] = wall_seconds;
  return report.dump(2) + "\n";
}

TrajectoryData read_trajectory_csv(const std::filesystem::path &path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty trajectory file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "step,time_day,plant_id,s_m_units,x,y,S,gamma")
    throw ConfigError("unexpected trajectory header: " + line);

  TrajectoryData data;
  std::vector<double> times;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 8) throw ConfigError("malformed trajectory row: " + line);
    const auto step = static_cast<std::size_t>(parse_double(f[0], "trajectory step"));
    const double t = parse_double(f[1], "trajectory time");
    const auto plant = static_cast<std::size_t>(parse_double(f[2], "trajectory plant"));
    const double size = parse_double(f[3], "trajectory size");
    if (step >= data.history.size()) {
      data.history.resize(step + 1);
      times.resize(step + 1, 0.0);
    }
    times[step] = t;
    if (plant >= data.history[step].size()) data.history[step].resize(plant + 1);
    data.history[step][plant] = size;
    if (step == 0) {
      if (plant >= data.theta.size()) data.theta.resize(plant + 1);
      data.theta[plant] = Parameters{parse_double(f[4], "trajectory x"),
                                     parse_double(f[5], "trajectory y"),
                                     parse_double(f[6], "trajectory S"),
                                     parse_double(f[7], "trajectory gamma")};
    }
  }
  if (data.history.empty()) throw ConfigError("trajectory has no rows: " + path.string());
  for (const auto &row : data.history)
    if (row.size() != data.theta.size())
      throw ConfigError("trajectory rows are ragged: " + path.string());
  data.dt = data.history.size() > 1 ? times[1] - times[0] : 0.0;
  return data;
}

std::string scheme_report_json(const FlowApproximation &flow) {
  ordered_json report;
  report["version"] = kToolVersion;
  report["model_config"] = json::parse(flow.model.to_json_text());
  ordered_json scheme;
  scheme["ensemble_size"] = flow.scheme.ensemble_size;
  scheme["train_size"] = flow.scheme.train_size;
  scheme["iterations"] = flow.scheme.iterations;
  scheme["jitter"] = flow.scheme.jitter;
  scheme["seed"] = flow.scheme.seed;
  report["scheme_config"] = scheme;
  report["streams"] = {"omega-sample", "train-set", "test-set"};

  ordered_json iterations = ordered_json::array();
  for (std::size_t n = 0; n < flow.flow_omega.size(); ++n) {
    ordered_json entry;
    entry["iteration"] = n;
    entry["t_days"] = static_cast<double>(n) * flow.model.dt;
    entry["poly"] = poly_to_json(flow.poly[n]);
    entry["gp_ok"] = static_cast<bool>(flow.gp_ok[n]);
    entry["alpha"] = flow.alpha[n];
    entry["alpha_norm"] =
        flow.gp_ok[n] ? json(vector_norm(flow.alpha[n])) : json(nullptr);
    entry["J"] = flow.J[n] ? json(*flow.J[n]) : json(nullptr);
    entry["J_poly"] = flow.J_poly[n] ? json(*flow.J_poly[n]) : json(nullptr);
    iterations.push_back(entry);
  }
  report["iterations"] = iterations;
  return report.dump(2) + "\n";
}

void save_flow(const FlowApproximation &flow, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t n = 0; n < flow.flow_omega.size(); ++n) {
    std::string csv = "theta_x,theta_y,theta_S,theta_gamma,s_value,set_label\n";
    append_flow_rows(csv, flow.omega, flow.flow_omega[n], "omega");
    append_flow_rows(csv, flow.train, flow.flow_train[n], "train");
    append_flow_rows(csv, flow.test, flow.flow_test[n], "test");
    write_text_file(iteration_csv_path(dir, n), csv);
  }
  write_text_file(dir / "scheme_report.json", scheme_report_json(flow));
}

FlowApproximation load_flow(const std::filesystem::path &dir) {
  const std::filesystem::path report_path = dir / "scheme_report.json";
  json report;
  try {
    report = json::parse(read_text_file(report_path));
  } catch (const json::exception &err) {
    throw ConfigError("flow snapshot: cannot parse " + report_path.string() + ": " +
                      err.what());
  }

  FlowApproximation flow;
  try {
    flow.model = ModelConfig::from_json_text(report.at("model_config").dump());
    const json &scheme = report.at("scheme_config");
    flow.scheme.ensemble_size = scheme.at("ensemble_size").get<std::size_t>();
    flow.scheme.train_size = scheme.at("train_size").get<std::size_t>();
    flow.scheme.iterations = scheme.at("iterations").get<std::size_t>();
    flow.scheme.jitter = scheme.at("jitter").get<double>();
    flow.scheme.seed = scheme.at("seed").get<std::uint64_t>();
    flow.scheme.validate();

    for (const json &entry : report.at("iterations")) {
      flow.poly.push_back(poly_from_json(entry.at("poly")));
      flow.gp_ok.push_back(entry.at("gp_ok").get<bool>() ? 1 : 0);
      flow.alpha.push_back(entry.at("alpha").get<std::vector<double>>());
      const json &j_val = entry.at("J");
      flow.J.push_back(j_val.is_null() ? std::optional<double>()
                                       : std::optional<double>(j_val.get<double>()));
      const json &jp_val = entry.at("J_poly");
      flow.J_poly.push_back(jp_val.is_null() ? std::optional<double>()
                                             : std::optional<double>(jp_val.get<double>()));
    }
  } catch (const json::exception &err) {
    throw ConfigError("flow snapshot: malformed " + report_path.string() + ": " +
                      err.what());
  }
  if (flow.poly.empty()) throw ConfigError("flow snapshot: no iterations recorded");
  if (flow.poly.size() != flow.scheme.iterations + 1)
    throw ConfigError("flow snapshot: iteration entries do not match the scheme config");

  const std::size_t m = flow.scheme.ensemble_size;
  const std::size_t k = flow.scheme.train_size;
  for (std::size_t n = 0; n < flow.poly.size(); ++n) {
    const std::filesystem::path csv_path = iteration_csv_path(dir, n);
    std::istringstream in(read_text_file(csv_path));
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "theta_x,theta_y,theta_S,theta_gamma,s_value,set_label")
      throw ConfigError("unexpected flow header in " + csv_path.string());
    std::vector<double> fo, ft, fs;
    std::vector<Parameters> po, pt, ps;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const std::vector<std::string> f = split_csv_line(line);
      if (f.size() != 6) throw ConfigError("malformed flow row: " + line);
      Parameters theta{parse_double(f[0], "flow theta_x"), parse_double(f[1], "flow theta_y"),
                       parse_double(f[2], "flow theta_S"),
                       parse_double(f[3], "flow theta_gamma")};
      const double value = parse_double(f[4], "flow s_value");
      if (f[5] == "omega") {
        po.push_back(theta);
        fo.push_back(value);
      } else if (f[5] == "train") {
        pt.push_back(theta);
        ft.push_back(value);
      } else if (f[5] == "test") {
        ps.push_back(theta);
        fs.push_back(value);
      } else {
        throw ConfigError("unknown set label '" + f[5] + "' in " + csv_path.string());
      }
    }
    if (fo.size() != m || ft.size() != k || fs.size() != k)
      throw ConfigError("flow snapshot: row counts do not match the scheme config in " +
                        csv_path.string());
    if (n == 0) {
      flow.omega = std::move(po);
      flow.train = std::move(pt);
      flow.test = std::move(ps);
    }
    flow.flow_omega.push_back(std::move(fo));
    flow.flow_train.push_back(std::move(ft));
    flow.flow_test.push_back(std::move(fs));
  }

  rebuild_kernel_cache(flow, model_interaction(flow.model));
  return flow;
}

std::string density_csv(const DensityEstimate &d) {
  std::string csv = "s,density\n";
  for (std::size_t i = 0; i < d.grid.size(); ++i) {
    csv += format_double(d.grid[i]);
    csv += ',';
    csv += format_double(d.values[i]);
    csv += '\n';
  }
  return csv;
}

std::string density_sidecar_json(const SnapshotDensity &snap, std::size_t sample_count) {
  ordered_json side;
  side["version"] = kToolVersion;
  side["iteration"] = snap.iteration;
  side["t_days"] = snap.t_days;
  side["sample_count"] = sample_count;
  side["bandwidth"] = snap.density.bandwidth;
  side["support"] = {snap.density.lo, snap.density.hi};
  side["clipped"] = snap.clipped;
  return side.dump(2) + "\n";
}

std::string surface_csv(const ExpectationSurface &surface) {
  std::string csv = "x,y,e_n\n";
  for (std::size_t a = 0; a < surface.grid_size; ++a)
    for (std::size_t b = 0; b < surface.grid_size; ++b) {
      csv += format_double(surface.xs[a]);
      csv += ',';
      csv += format_double(surface.ys[b]);
      csv += ',';
      csv += format_double(surface.values[a * surface.grid_size + b]);
      csv += '\n';
    }
  return csv;
}

std::string density_plotscript(const std::vector<std::string> &csv_names) {
  std::string script =
      "set terminal pngcairo size 900,600\n"
      "set output 'density.png'\n"
      "set datafile separator ','\n"
      "set xlabel 's (m)'\n"
      "set ylabel 'density (1/m)'\n"
      "set key top right\n"
      "plot ";
  for (std::size_t i = 0; i < csv_names.size(); ++i) {
    if (i) script += ", \\\n     ";
    script += "'" + csv_names[i] + "' using 1:2 skip 1 with lines title '" +
              std::filesystem::path(csv_names[i]).stem().string() + "'";
  }
  script += "\n";
  return script;
}

std::string surface_plotscript(const std::string &csv_name, std::size_t grid_size) {
  std::string script =
      "set terminal pngcairo size 900,700\n"
      "set output 'surface.png'\n"
      "set datafile separator ','\n"
      "set xlabel 'x (m)'\n"
      "set ylabel 'y (m)'\n"
      "set zlabel 'expected size (m)'\n";
  script += "set dgrid3d " + std::to_string(grid_size) + "," + std::to_string(grid_size) +
            "\n"
            "set hidden3d\n";
  script += "splot '" + csv_name + "' using 1:2:3 skip 1 with lines notitle\n";
  return script;
}

std::string manifest_json(const RunManifest &manifest) {
  ordered_json out;
  out["version"] = kToolVersion;
  out["command"] = manifest.command;
  try {
    out["config"] = json::parse(manifest.config_json);
  } catch (const json::exception &) {
    out["config"] = manifest.config_json;
  }
  out["seed"] = manifest.seed;
  out["streams"] = manifest.streams;
  out["started"] = manifest.started;
  out["finished"] = manifest.finished;
  ordered_json outputs = ordered_json::array();
  for (const std::filesystem::path &path : manifest.outputs) {
    ordered_json entry;
    entry["path"] = path.filename().string();
    entry["bytes"] = std::filesystem::file_size(path);
    entry["hash_fnv1a64"] = file_hash_hex(path);
    outputs.push_back(entry);
  }
  out["outputs"] = outputs;
  return out.dump(2) + "\n";
}

void write_manifest(const RunManifest &manifest, const std::filesystem::path &path) {
  write_text_file(path, manifest_json(manifest));
}

std::string utc_timestamp_now() {
  const std::time_t now = std::time(nullptr);
  std::tm parts{};
  gmtime_r(&now, &parts);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &parts);
  return buf;
}

}  // namespace meanfield
