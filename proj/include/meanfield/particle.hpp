#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "meanfield/model.hpp"
#include "meanfield/rng.hpp"

namespace meanfield {

// Soft-invariant violation noticed while stepping: a size at or below s_m, a
// size above its equilibrium S_i, or a competition factor outside [0, 1].
// These are recorded, never fatal (the explicit Euler step may overshoot).
struct StepWarning {
  enum class Kind { BelowMinimum, AboveEquilibrium, CompetitionOutOfRange };
  Kind kind;
  int step;       // step index that produced the state
  int particle;   // particle index (-1 for pair-level competition warnings)
  double value;   // offending size or competition factor
};

std::string to_string(StepWarning::Kind kind);

// N interacting plants plus the full recorded size history.
struct ParticleEnsemble {
  ModelConfig cfg;
  std::vector<Parameters> theta;          // static parameters, index-aligned
  std::vector<double> sizes;              // current sizes in metres
  int step_index = 0;
  std::vector<std::vector<double>> history;  // history[k][i] = size at step k
  std::vector<StepWarning> warnings;
  bool clamp_to_domain = false;           // optional clamp to (s_m, S_i]; off by default

  std::size_t count() const { return sizes.size(); }
  double time() const { return step_index * cfg.dt; }
};

// Samples an N-plant ensemble from the initial law (all sizes = s0) using the
// "initial-ensemble" sub-stream of cfg.seed.
ParticleEnsemble make_ensemble(const ModelConfig &cfg, std::size_t n, RngStream &rng);

// Ensemble with explicitly chosen parameters and a common initial size.
ParticleEnsemble make_ensemble(const ModelConfig &cfg, std::vector<Parameters> theta,
                               double initial_size);

// Mean-field velocity ds_i/dt = (1/(N-1)) sum_{j != i} g(z_i, z_j) for the
// current state; a single plant grows with the pure Gompertz drift
// gamma s log(S/s).  The inner sum runs in ascending j for determinism.
std::vector<double> velocities(const ParticleEnsemble &ensemble);

// One synchronous explicit Euler step; appends to history and records
// invariant warnings for the new state.
void step(ParticleEnsemble &ensemble);

// ceil(horizon_days / dt) steps from a freshly sampled ensemble.
ParticleEnsemble simulate(const ModelConfig &cfg, std::size_t n, double horizon_days,
                          RngStream &rng);

// Number of Euler steps covering the horizon (robust to dt not dividing the
// horizon exactly in floating point).
int step_count(double horizon_days, double dt);

// Equal-weight cloud of the ensemble state at a recorded step, converted to
// the log-size coordinate.  step_index must be within the recorded history.
PointCloud empirical_measure(const ParticleEnsemble &ensemble, std::size_t step_index);

// Focal-plant experiment: the same tracked plant (index 0) is embedded in
// increasingly crowded ensembles.  Competitor parameter sets are nested
// (drawn once from the "tracked-competitors" sub-stream), so growing N only
// adds plants.
struct TrackedPlantResult {
  std::vector<std::size_t> n_values;
  double dt = 0;
  std::vector<std::vector<double>> focal_series;  // [n_index][step] focal sizes
};

TrackedPlantResult tracked_plant_experiment(const ModelConfig &cfg, const Parameters &focal,
                                            const std::vector<std::size_t> &n_values,
                                            double horizon_days, std::uint64_t seed);

}  // namespace meanfield
