#include "meanfield/density.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "meanfield/errors.hpp"
#include "meanfield/parallel.hpp"

namespace meanfield {

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  out.front() = lo;
  out.back() = hi;
  return out;
}

}  // namespace

double default_bandwidth(std::size_t sample_count) {
  if (sample_count == 0)
    throw std::invalid_argument("default_bandwidth: empty sample");
  return std::pow(static_cast<double>(sample_count), -0.4);
}

DensityEstimate beta_kde(const std::vector<double> &samples, double lo, double hi,
                         double bandwidth, std::size_t grid_size) {
  if (!(hi > lo)) throw std::invalid_argument("beta_kde: support must satisfy lo < hi");
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw std::invalid_argument("beta_kde: bandwidth must be positive and finite");
  if (samples.empty()) throw std::invalid_argument("beta_kde: empty sample");
  if (grid_size < 2) throw std::invalid_argument("beta_kde: grid needs at least two points");

  const double width = hi - lo;
  const std::size_t n = samples.size();

  // each sample contributes a Beta(u/b + 1, (1-u)/b + 1) kernel on [0, 1];
  // precompute its shape parameters and log-normalizer
  std::vector<double> shape_a(n), shape_c(n), log_norm(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = samples[i];
    if (!(v >= lo && v <= hi)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "beta_kde: sample %zu (%.17g) lies outside [%g, %g]",
                    i, v, lo, hi);
      throw CoverageError(buf);
    }
    const double u = (v - lo) / width;
    shape_a[i] = u / bandwidth + 1.0;
    shape_c[i] = (1.0 - u) / bandwidth + 1.0;
    log_norm[i] = std::lgamma(shape_a[i] + shape_c[i]) - std::lgamma(shape_a[i]) -
                  std::lgamma(shape_c[i]);
  }

  DensityEstimate out;
  out.lo = lo;
  out.hi = hi;
  out.bandwidth = bandwidth;
  out.grid = linspace(lo, hi, grid_size);
  out.values.assign(grid_size, 0.0);

  parallel_for(grid_size, [&](std::size_t gi) {
    const double u = (out.grid[gi] - lo) / width;
    const double log_u = std::log(u);           // -inf at the left edge
    const double log_1mu = std::log1p(-u);      // -inf at the right edge
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      // exponents of zero kill the -inf logs at the support edges
      const double pa = shape_a[i] - 1.0;
      const double pc = shape_c[i] - 1.0;
      const double expo =
          log_norm[i] + (pa == 0.0 ? 0.0 : pa * log_u) + (pc == 0.0 ? 0.0 : pc * log_1mu);
      acc += std::exp(expo);
    }
    out.values[gi] = acc / (static_cast<double>(n) * width);
  });
  return out;
}

double density_integral(const DensityEstimate &d) {
  if (d.grid.size() < 2 || d.grid.size() != d.values.size())
    throw std::invalid_argument("density_integral: malformed estimate");
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < d.grid.size(); ++i)
    acc += 0.5 * (d.values[i] + d.values[i + 1]) * (d.grid[i + 1] - d.grid[i]);
  return acc;
}

std::vector<SnapshotDensity> size_marginal_snapshots(const FlowApproximation &flow,
                                                     const std::vector<std::size_t> &iterations,
                                                     std::size_t sample_count,
                                                     double bandwidth) {
  if (sample_count == 0)
    throw std::invalid_argument("size_marginal_snapshots: needs a positive sample count");
  const ModelConfig &cfg = flow.model;
  for (std::size_t n : iterations) {
    if (n > flow.last_iteration()) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "size_marginal_snapshots: iteration %zu is not covered (last is %zu)", n,
                    flow.last_iteration());
      throw CoverageError(buf);
    }
  }

  RngStream rng = RngStream::substream(flow.scheme.seed, "density-sample");
  std::vector<Parameters> theta;
  theta.reserve(sample_count);
  for (std::size_t i = 0; i < sample_count; ++i) theta.push_back(sample_parameters(cfg, rng));

  const Interaction g = model_interaction(cfg);
  const double b = bandwidth > 0.0 ? bandwidth : default_bandwidth(sample_count);

  std::vector<SnapshotDensity> out;
  for (std::size_t n : iterations) {
    SnapshotDensity snap;
    snap.iteration = n;
    snap.t_days = static_cast<double>(n) * cfg.dt;

    std::vector<double> sizes(sample_count);
    parallel_for(sample_count, [&](std::size_t i) {
      sizes[i] = n == 0 ? cfg.s0 : gp_reconstruct(theta[i], flow, n, g);
    });
    std::size_t clipped = 0;
    for (double &s : sizes) {
      if (s < cfg.s_m) {
        s = cfg.s_m;
        ++clipped;
      } else if (s > cfg.S_M) {
        s = cfg.S_M;
        ++clipped;
      }
    }
    snap.clipped = clipped;
    snap.density = beta_kde(sizes, cfg.s_m, cfg.S_M, b);
    out.push_back(std::move(snap));
  }
  return out;
}

ExpectationSurface expectation_surface(const FlowApproximation &flow, std::size_t n,
                                       std::size_t grid_size, std::size_t mc_count) {
  if (grid_size < 2)
    throw std::invalid_argument("expectation_surface: needs at least a 2 x 2 grid");
  if (mc_count == 0)
    throw std::invalid_argument("expectation_surface: needs Monte Carlo draws");
  if (n > flow.last_iteration()) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "expectation_surface: iteration %zu is not covered (last is %zu)", n,
                  flow.last_iteration());
    throw CoverageError(buf);
  }
  const ModelConfig &cfg = flow.model;
  const Interaction g = model_interaction(cfg);

  // common random numbers: every grid node shares the same conditional draws
  RngStream u_rng = RngStream::substream(flow.scheme.seed, "marginalization-u");
  RngStream up_rng = RngStream::substream(flow.scheme.seed, "marginalization-uprime");
  std::vector<double> u(mc_count), up(mc_count);
  for (double &v : u) v = u_rng.uniform01();
  for (double &v : up) v = up_rng.uniform01();

  ExpectationSurface out;
  out.iteration = n;
  out.grid_size = grid_size;
  out.mc_count = mc_count;
  out.xs = linspace(0.0, cfg.L, grid_size);
  out.ys = out.xs;
  out.values.assign(grid_size * grid_size, 0.0);

  parallel_for(grid_size * grid_size, [&](std::size_t node) {
    const double x = out.xs[node / grid_size];
    const double y = out.ys[node % grid_size];
    double acc = 0.0;
    for (std::size_t i = 0; i < mc_count; ++i) {
      Parameters theta{x, y, cfg.S_lower(x) + cfg.sigma_S * u[i],
                       cfg.gamma_lower(y) + cfg.sigma_gamma * up[i]};
      acc += n == 0 ? cfg.s0 : gp_reconstruct(theta, flow, n, g);
    }
    out.values[node] = acc / static_cast<double>(mc_count);
  });
  return out;
}

}  // namespace meanfield
