#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meanfield/rng.hpp"

namespace meanfield {

// Static parameters of one plant: planar position (x, y) in metres,
// equilibrium size S in metres, growth rate gamma in 1/day.  These never
// change during a run; only the size does.
struct Parameters {
  double x = 0, y = 0, S = 0, gamma = 0;
};

// A plant's size can be carried either in metres (s) or as the log-ratio
// r = log(s / s_m) against the minimum size s_m.  The model's growth law is
// usually integrated in s; the theory-facing norms and bounds live in r.
enum class Coordinate { Size, LogSize };

// One point of the phase space: the dynamic size (tagged with its coordinate)
// plus the static parameters.
struct PhaseVector {
  double state = 0;
  Coordinate coord = Coordinate::Size;
  Parameters theta;
};

// Equal-weight point cloud (an empirical measure).  Points are expected in
// the log-size coordinate whenever transport distances are computed.
struct PointCloud {
  std::vector<PhaseVector> points;
};

// Growth/stability constants of the interaction in log-size coordinates:
//   K1  bounds |g_r| by K1 (1 + |r1| + |r2|),
//   K2  two-pair Lipschitz factor, K3 one-sided Lipschitz factor,
//   K4  Lipschitz factor in the static parameters,
//   K24 = K2 + K4, the combined constant used by the stability bound.
struct LipschitzConstants {
  double K1 = 0, K2 = 0, K3 = 0, K4 = 0, K24 = 0;
};

// Full model configuration.  Units: metres, days.
struct ModelConfig {
  double L = 1.0;             // side of the square habitat [0, L]^2
  double S_m = 0.8;           // smallest equilibrium size
  double S_M = 1.0;           // largest equilibrium size
  double sigma_S = 1e-2;      // width of the S band conditional on x
  double gamma_m = 0.1;       // smallest growth rate
  double gamma_M = 1.0;       // largest growth rate
  double sigma_gamma = 1e-2;  // width of the gamma band conditional on y
  double s0 = 0.3;            // common initial size
  double s_m = 5e-2;          // minimum plant size (log-coordinate reference)
  double R_M = 2.995732273553991;   // upper bound for log(S / s_m), >= log(S_M / s_m)
  double sigma_x = 1.0;       // spatial scale of the competition kernel
  double sigma_r = 0.6931471805599453;  // size-ratio scale of the competition kernel
  double dt = 0.1;            // Euler time step in days
  std::uint64_t seed = 1;     // master seed; named sub-streams derive from it

  // Bounds of the uniform S | x and gamma | y bands of the initial law.
  double S_lower(double x) const { return S_m + x / L * (S_M - sigma_S - S_m); }
  double S_upper(double x) const { return S_lower(x) + sigma_S; }
  double gamma_lower(double y) const { return gamma_m + y / L * (gamma_M - sigma_gamma - gamma_m); }
  double gamma_upper(double y) const { return gamma_lower(y) + sigma_gamma; }

  // Throws ConfigError when any invariant fails (positivity, band widths,
  // R_M >= log(S_M / s_m), s_m < s0 < S_m, dt > 0).
  void validate() const;

  // Flat JSON object with exactly the documented keys; unknown or missing
  // keys are rejected with the key name.
  static ModelConfig from_json_text(const std::string &text);
  std::string to_json_text() const;
};

// The default configuration used throughout the tests and docs.
ModelConfig default_config();

// Shade competition exerted on a plant of size s1 by a neighbour of size s2
// at planar distance d.  Dimensionless; lies in [0, 1] whenever both sizes
// are in (s_m, S_M] with log(S_M/s_m) <= R_M.  Throws std::invalid_argument
// for non-positive sizes.
double competition_factor(double s1, double s2, double d, const ModelConfig &cfg);

// Pairwise growth contribution g(z1, z2) for the size of plant 1, in m/day:
//   gamma1 * s1 * (log(S1/s_m) * (1 - C) - log(s1/s_m)).
// Inputs are size-coordinate phase vectors; non-finite states are rejected.
double interaction_s(const PhaseVector &z1, const PhaseVector &z2, const ModelConfig &cfg);

// Same growth law expressed for r = log(s / s_m):
//   gamma1 * (log(S1/s_m) * (1 - C_r) - r1),     in 1/day.
// Inputs are log-coordinate phase vectors.  Satisfies
//   s1 * interaction_r = interaction_s  under r_i = log(s_i / s_m).
double interaction_r(const PhaseVector &z1, const PhaseVector &z2, const ModelConfig &cfg);

// Coordinate changes between s and r = log(s / s_m).
PhaseVector to_log(const PhaseVector &z, const ModelConfig &cfg);
PhaseVector to_size(const PhaseVector &z, const ModelConfig &cfg);

// Weighted l1 phase-space norm |r| + (|x| + |y|)/L + |S|/s_m + |gamma|/gamma_m.
// The vector must be in the log-size coordinate.
double phase_norm(const PhaseVector &z, const ModelConfig &cfg);

// Norm of the difference of two log-coordinate phase vectors (the transport
// ground cost).
double phase_distance(const PhaseVector &a, const PhaseVector &b, const ModelConfig &cfg);

// True when z (log coordinate) lies in the admissible domain:
// s_m < s <= S, (x, y) in [0, L]^2, S in [S_m, S_M], gamma in [gamma_m, gamma_M].
bool in_domain(const PhaseVector &z, const ModelConfig &cfg);

// One parameter draw from the initial law: x, y uniform on [0, L]; S uniform
// on [S_lower(x), S_upper(x)]; gamma uniform on [gamma_lower(y), gamma_upper(y)].
Parameters sample_parameters(const ModelConfig &cfg, RngStream &rng);

// `count` initial phase vectors (size coordinate, all sizes = s0).
std::vector<PhaseVector> sample_initial(const ModelConfig &cfg, std::size_t count,
                                        RngStream &rng);

// The same initial draws as an equal-weight log-coordinate cloud
// (r = log(s0/s_m)), ready for transport distances.
PointCloud initial_cloud(const ModelConfig &cfg, std::size_t count, RngStream &rng);

// Growth/stability constants implied by the configuration.
LipschitzConstants theory_constants(const ModelConfig &cfg);

// Closed-form isolated-plant (Gompertz) size: s(t) = S exp(-e^{-gamma t} log(S/s0)).
double gompertz_size(double t, double s0, double S, double gamma);

namespace detail {
// Shared single evaluation path for the growth law, on precomputed logs:
// ls = log(s/s_m) for both plants, R1 = log(S1/s_m), d2 = squared distance.
// Returns the pair growth in r-units (multiply by s1 for m/day) and the
// competition factor.
struct PairGrowth {
  double growth_r;
  double competition;
};
PairGrowth pair_growth(double ls1, double R1, double gamma1, double ls2, double d2,
                       const ModelConfig &cfg);
}  // namespace detail

}  // namespace meanfield
