#include "meanfield/particle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "meanfield/errors.hpp"
#include "meanfield/parallel.hpp"

namespace meanfield {

std::string to_string(StepWarning::Kind kind) {
  switch (kind) {
    case StepWarning::Kind::BelowMinimum: return "below_minimum";
    case StepWarning::Kind::AboveEquilibrium: return "above_equilibrium";
    case StepWarning::Kind::CompetitionOutOfRange: return "competition_out_of_range";
  }
  return "unknown";
}

ParticleEnsemble make_ensemble(const ModelConfig &cfg, std::size_t n, RngStream &rng) {
  if (n < 1) throw std::invalid_argument("make_ensemble: need at least one plant");
  std::vector<PhaseVector> init = sample_initial(cfg, n, rng);
  std::vector<Parameters> theta;
  theta.reserve(n);
  for (const auto &z : init) theta.push_back(z.theta);
  return make_ensemble(cfg, std::move(theta), cfg.s0);
}

ParticleEnsemble make_ensemble(const ModelConfig &cfg, std::vector<Parameters> theta,
                               double initial_size) {
  if (theta.empty()) throw std::invalid_argument("make_ensemble: need at least one plant");
  if (!(initial_size > 0.0))
    throw std::invalid_argument("make_ensemble: initial size must be positive");
  ParticleEnsemble e;
  e.cfg = cfg;
  e.theta = std::move(theta);
  e.sizes.assign(e.theta.size(), initial_size);
  e.history.push_back(e.sizes);
  return e;
}

namespace {

// Per-particle mean-field force plus the competition-factor range seen while
// accumulating it (single evaluation path with interaction_s, on cached logs).
struct ForceScan {
  double velocity;
  double c_min, c_max;
};

ForceScan force_on(const ParticleEnsemble &e, std::size_t i,
                   const std::vector<double> &log_sizes) {
  const ModelConfig &cfg = e.cfg;
  const std::size_t n = e.count();
  const Parameters &ti = e.theta[i];
  double si = e.sizes[i];
  double lsi = log_sizes[i];
  double Ri = std::log(ti.S / cfg.s_m);

  if (n == 1)  // isolated plant: pure Gompertz drift
    return ForceScan{ti.gamma * si * (Ri - lsi), 0.0, 0.0};

  double sum = 0;
  double cmin = 1.0, cmax = 0.0;
  for (std::size_t j = 0; j < n; ++j) {  // ascending j for determinism
    if (j == i) continue;
    double dx = ti.x - e.theta[j].x;
    double dy = ti.y - e.theta[j].y;
    detail::PairGrowth pg =
        detail::pair_growth(lsi, Ri, ti.gamma, log_sizes[j], dx * dx + dy * dy, cfg);
    sum += si * pg.growth_r;
    cmin = std::min(cmin, pg.competition);
    cmax = std::max(cmax, pg.competition);
  }
  return ForceScan{sum / static_cast<double>(n - 1), cmin, cmax};
}

}  // namespace

std::vector<double> velocities(const ParticleEnsemble &e) {
  std::vector<double> log_sizes(e.count());
  for (std::size_t i = 0; i < e.count(); ++i) {
    if (!(e.sizes[i] > 0.0) || !std::isfinite(e.sizes[i]))
      throw NumericalError("velocities: non-positive size at step " +
                           std::to_string(e.step_index));
    log_sizes[i] = std::log(e.sizes[i] / e.cfg.s_m);
  }
  std::vector<double> v(e.count());
  parallel_for(e.count(),
               [&](std::size_t i) { v[i] = force_on(e, i, log_sizes).velocity; });
  return v;
}

void step(ParticleEnsemble &e) {
  const std::size_t n = e.count();
  std::vector<double> log_sizes(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(e.sizes[i] > 0.0) || !std::isfinite(e.sizes[i]))
      throw NumericalError("step: non-positive size entering step " +
                           std::to_string(e.step_index));
    log_sizes[i] = std::log(e.sizes[i] / e.cfg.s_m);
  }

  std::vector<ForceScan> scans(n);
  parallel_for(n, [&](std::size_t i) { scans[i] = force_on(e, i, log_sizes); });

  e.step_index += 1;
  double cmin = 1.0, cmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = e.sizes[i] + e.cfg.dt * scans[i].velocity;
    if (e.clamp_to_domain)
      s = std::clamp(s, std::nextafter(e.cfg.s_m, e.cfg.S_M), e.theta[i].S);
    e.sizes[i] = s;
    if (s <= e.cfg.s_m)
      e.warnings.push_back(StepWarning{StepWarning::Kind::BelowMinimum, e.step_index,
                                       static_cast<int>(i), s});
    else if (s > e.theta[i].S)
      e.warnings.push_back(StepWarning{StepWarning::Kind::AboveEquilibrium, e.step_index,
                                       static_cast<int>(i), s});
    cmin = std::min(cmin, scans[i].c_min);
    cmax = std::max(cmax, scans[i].c_max);
  }
  if (n > 1 && (cmin < 0.0 || cmax > 1.0))
    e.warnings.push_back(StepWarning{StepWarning::Kind::CompetitionOutOfRange,
                                     e.step_index, -1, cmin < 0.0 ? cmin : cmax});
  e.history.push_back(e.sizes);
}

int step_count(double horizon_days, double dt) {
  if (!(horizon_days > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("step_count: horizon and dt must be positive");
  double q = horizon_days / dt;
  return static_cast<int>(std::ceil(q * (1.0 - 1e-12)));
}

ParticleEnsemble simulate(const ModelConfig &cfg, std::size_t n, double horizon_days,
                          RngStream &rng) {
  cfg.validate();
  ParticleEnsemble e = make_ensemble(cfg, n, rng);
  int steps = step_count(horizon_days, cfg.dt);
  for (int k = 0; k < steps; ++k) step(e);
  return e;
}

PointCloud empirical_measure(const ParticleEnsemble &e, std::size_t step_index) {
  if (step_index >= e.history.size())
    throw std::out_of_range("empirical_measure: step index beyond recorded history");
  PointCloud cloud;
  cloud.points.reserve(e.count());
  for (std::size_t i = 0; i < e.count(); ++i) {
    double s = e.history[step_index][i];
    if (!(s > 0.0))
      throw NumericalError("empirical_measure: non-positive recorded size");
    cloud.points.push_back(
        PhaseVector{std::log(s / e.cfg.s_m), Coordinate::LogSize, e.theta[i]});
  }
  return cloud;
}

TrackedPlantResult tracked_plant_experiment(const ModelConfig &cfg, const Parameters &focal,
                                            const std::vector<std::size_t> &n_values,
                                            double horizon_days, std::uint64_t seed) {
  if (n_values.empty())
    throw std::invalid_argument("tracked_plant_experiment: empty N list");
  cfg.validate();

  std::size_t max_n = *std::max_element(n_values.begin(), n_values.end());
  RngStream rng = RngStream::substream(seed, "tracked-competitors");
  std::vector<Parameters> pool;  // nested competitor sets: N only appends
  pool.reserve(max_n > 0 ? max_n - 1 : 0);
  for (std::size_t i = 0; i + 1 < max_n; ++i) pool.push_back(sample_parameters(cfg, rng));

  TrackedPlantResult out;
  out.n_values = n_values;
  out.dt = cfg.dt;
  int steps = step_count(horizon_days, cfg.dt);
  for (std::size_t n : n_values) {
    if (n < 1) throw std::invalid_argument("tracked_plant_experiment: N must be >= 1");
    std::vector<Parameters> theta;
    theta.reserve(n);
    theta.push_back(focal);
    theta.insert(theta.end(), pool.begin(), pool.begin() + (n - 1));
    ParticleEnsemble e = make_ensemble(cfg, std::move(theta), cfg.s0);
    std::vector<double> series;
    series.reserve(steps + 1);
    series.push_back(e.sizes[0]);
    for (int k = 0; k < steps; ++k) {
      step(e);
      series.push_back(e.sizes[0]);
    }
    out.focal_series.push_back(std::move(series));
  }
  return out;
}

}  // namespace meanfield
