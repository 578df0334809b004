#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "meanfield/model.hpp"
#include "meanfield/scheme.hpp"

namespace meanfield {

// Largest cloud size accepted by the exact W1 solver (the assignment is cubic).
inline constexpr std::size_t kMaxExactTransportSize = 5000;

// Exact minimum-cost perfect matching on an n x n cost matrix (row-major),
// via shortest augmenting paths with potentials.  Returns the total cost and
// the column matched to each row.
struct AssignmentResult {
  double cost = 0;
  std::vector<std::size_t> match;
};
AssignmentResult solve_assignment(const std::vector<double> &cost, std::size_t n);

// Exact Wasserstein-1 distance between two equal-size equal-weight clouds of
// log-coordinate phase points, ground cost = phase_distance.  Throws
// std::invalid_argument on size mismatch and CoverageError above the size cap.
double w1_exact(const PointCloud &a, const PointCloud &b, const ModelConfig &cfg);

// Exact 1-d W1 between equal-size scalar samples: mean |sorted(a) - sorted(b)|.
double w1_marginal_1d(std::vector<double> a, std::vector<double> b);

// Sampling-rate experiment: mean two-sample W1 between independent initial
// clouds of size N, for each N, plus the fitted log-log slope.
struct RateExperiment {
  std::vector<std::size_t> sizes;
  std::vector<double> mean_w1;   // averaged over repetitions
  double slope = 0;              // d log(mean W1) / d log N
  double slope_stderr = 0;
};
RateExperiment dudley_rate_experiment(const ModelConfig &cfg,
                                      const std::vector<std::size_t> &sizes,
                                      std::size_t reps, std::uint64_t seed);

// Least-squares line through (log x, log y); returns {slope, stderr of slope}.
std::pair<double, double> fit_loglog_slope(const std::vector<double> &x,
                                           const std::vector<double> &y);

// Stability (Dobrushin-type) bound on W1 between the N-plant empirical
// measure and the mean-field limit, from the initial moments m1 = E|z|,
// m2 = E|z|^2, the support radius r0 and the measured initial distance:
//
//   envelope(t) = ((3 + 2 m1) e^{2 K1 (1+m1) t} - 1) / (2 (1 + m1))
//   f(t) = 2 K24 envelope(t) (1 + 2 envelope(t)(2 + r0 + m1))
//   e(t) = 2 K24 envelope(t) (1 + m1 + 4 envelope(t)(1 + 2 m1 + m1^2 + m2))
//   bound(t) = e^{F(t)} (w1_at_0 + (1/(N-1)) \int_0^t e(tau) e^{-F(tau)} dtau),
//
// with F(t) = \int_0^t f, both integrals by composite Simpson (1000 panels).
// The bound is double exponential in t; once it overflows the result is
// +infinity.  bound(0) equals w1_at_0 exactly.
struct StabilityInputs {
  LipschitzConstants k;
  double m1 = 0, m2 = 0, r0 = 0;

  double envelope(double t) const;
  double f(double t) const;
  double e(double t) const;
  double big_f(double t) const;
  double bound(double t, double w1_at_0, std::size_t n) const;
};

double dobrushin_bound(double t, const ModelConfig &cfg, double m1, double m2, double r0,
                       double w1_at_0, std::size_t n);

// Phase norm of the domain corner (R_M, L, L, S_M, gamma_M): a support radius
// for the initial law.
double support_radius(const ModelConfig &cfg);

// Chaos-propagation experiment: for each N, `reps` ensembles share the same
// focal plant (parameters drawn once) while the other N-1 plants are redrawn
// per repetition.  Reports the mean |s_1(t) - shat_n(theta_1)| focal
// discrepancy and, as an independence proxy, the across-reps correlation of
// the fixed index pair (s_1(t), s_2(t)) (missing when reps < 2 or a variance
// vanishes).  Plant 2's parameters vary with the repetition, so its size
// fluctuates through its own draw; any correlation with the focal plant comes
// from their O(1/(N-1)) interaction and fades as N grows.
struct ChaosResult {
  std::vector<std::size_t> n_values;
  std::vector<double> mean_discrepancy;
  std::vector<std::optional<double>> pair_correlation;
  Parameters focal;
  double t_days = 0;
};
ChaosResult chaos_propagation_test(const FlowApproximation &flow,
                                   const std::vector<std::size_t> &n_values, double t_days,
                                   std::size_t reps, std::uint64_t seed);

// First and second moments (mean |z|, mean |z|^2) of a log-coordinate cloud.
std::pair<double, double> moments(const PointCloud &cloud, const ModelConfig &cfg);

// Deterministic subsample (without replacement) of a cloud, for comparing a
// fixed large reference cloud against smaller ones.
PointCloud subsample(const PointCloud &cloud, std::size_t count, RngStream &rng);

}  // namespace meanfield
