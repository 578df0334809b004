#pragma once

#include <cstddef>
#include <vector>

#include "meanfield/scheme.hpp"

namespace meanfield {

// A 1-d density estimate on a bounded support, evaluated on a regular grid.
struct DensityEstimate {
  double lo = 0, hi = 1;
  double bandwidth = 0;
  std::vector<double> grid;    // evaluation points, inclusive of lo and hi
  std::vector<double> values;  // density values; integrates to ~1 over [lo, hi]
};

// Default beta-kernel bandwidth for a sample of the given size: count^(-2/5).
double default_bandwidth(std::size_t sample_count);

// Boundary-respecting beta-kernel density estimate on [lo, hi]: each sample
// is rescaled to u in [0, 1] and contributes a Beta(u/b + 1, (1-u)/b + 1)
// kernel; the estimate is rescaled back by 1/(hi - lo).  Throws CoverageError
// naming the index of the first sample outside [lo, hi].
DensityEstimate beta_kde(const std::vector<double> &samples, double lo, double hi,
                         double bandwidth, std::size_t grid_size = 512);

// Trapezoid integral of the estimate over its grid (normalization check).
double density_integral(const DensityEstimate &d);

// Size-marginal density of the mean-field approximation at selected
// iterations.  One parameter sample (size sample_count) is drawn once from
// the "density-sample" sub-stream and pushed through the reconstructed flow
// at each requested iteration; sizes outside [s_m, S_M] are clipped to the
// support, with the clip count reported.
struct SnapshotDensity {
  std::size_t iteration = 0;
  double t_days = 0;
  std::size_t clipped = 0;
  DensityEstimate density;
};
std::vector<SnapshotDensity> size_marginal_snapshots(const FlowApproximation &flow,
                                                     const std::vector<std::size_t> &iterations,
                                                     std::size_t sample_count,
                                                     double bandwidth /* <= 0: default */);

// Expected-size surface over the habitat: at each node (x_a, y_b) of a G x G
// grid on [0, L]^2, the mean of shat_n over the conditional law of (S, gamma)
// given (x, y), by Monte Carlo with mc_count draws.  The same uniform draws
// (sub-streams "marginalization-u"/"marginalization-uprime") are shared by
// every node, so the surface is smooth in the grid and reproducible.
struct ExpectationSurface {
  std::size_t iteration = 0;
  std::size_t grid_size = 0;
  std::size_t mc_count = 0;
  std::vector<double> xs, ys;     // grid coordinates, size grid_size each
  std::vector<double> values;     // row-major: values[a * grid_size + b] at (xs[a], ys[b])
};
ExpectationSurface expectation_surface(const FlowApproximation &flow, std::size_t n,
                                       std::size_t grid_size, std::size_t mc_count);

}  // namespace meanfield
