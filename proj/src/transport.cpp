#include "meanfield/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>

#include "meanfield/errors.hpp"
#include "meanfield/particle.hpp"

namespace meanfield {

namespace {

constexpr std::size_t kSimpsonPanels = 1000;

// Composite Simpson rule with a fixed even panel count.  Integrands that hit
// +infinity propagate it (the sum overflows), and a [0, 0] interval is 0.
double simpson(const std::function<double(double)> &fn, double t) {
  if (t == 0.0) return 0.0;
  const double h = t / static_cast<double>(kSimpsonPanels);
  double sum = fn(0.0) + fn(t);
  for (std::size_t i = 1; i < kSimpsonPanels; ++i)
    sum += (i % 2 == 1 ? 4.0 : 2.0) * fn(static_cast<double>(i) * h);
  return h / 3.0 * sum;
}

double sample_correlation(const std::vector<double> &a, const std::vector<double> &b,
                          std::optional<double> &out) {
  const std::size_t n = a.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double va = 0, vb = 0, cab = 0;
  for (std::size_t i = 0; i < n; ++i) {
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
    cab += (a[i] - ma) * (b[i] - mb);
  }
  if (va <= 0.0 || vb <= 0.0) {
    out = std::nullopt;
    return 0.0;
  }
  out = cab / std::sqrt(va * vb);
  return *out;
}

}  // namespace

AssignmentResult solve_assignment(const std::vector<double> &cost, std::size_t n) {
  if (n == 0) throw std::invalid_argument("solve_assignment: empty problem");
  if (cost.size() != n * n)
    throw std::invalid_argument("solve_assignment: cost matrix size mismatch");

  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t none = n;  // sentinel row index; column n is the virtual start
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> matched_row(n + 1, none), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (std::size_t row = 0; row < n; ++row) {
    matched_row[n] = row;
    std::size_t j0 = n;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = matched_row[j0];
      double delta = inf;
      std::size_t j1 = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 * n + j] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[matched_row[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (matched_row[j0] != none);
    do {
      const std::size_t j1 = way[j0];
      matched_row[j0] = matched_row[j1];
      j0 = j1;
    } while (j0 != n);
  }

  AssignmentResult result;
  result.match.assign(n, 0);
  for (std::size_t j = 0; j < n; ++j) result.match[matched_row[j]] = j;
  for (std::size_t i = 0; i < n; ++i) result.cost += cost[i * n + result.match[i]];
  return result;
}

namespace {

// Lexicographic order on clouds (state, then the four parameter fields, point
// by point).  Used to pick a canonical argument order so that the assignment
// is solved on the identical cost matrix no matter how the caller ordered the
// two clouds; this makes the metric's symmetry hold to the last bit even when
// the optimal matching is not unique.
bool cloud_lex_less(const PointCloud &a, const PointCloud &b) {
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    const PhaseVector &p = a.points[i];
    const PhaseVector &q = b.points[i];
    if (p.state != q.state) return p.state < q.state;
    if (p.theta.x != q.theta.x) return p.theta.x < q.theta.x;
    if (p.theta.y != q.theta.y) return p.theta.y < q.theta.y;
    if (p.theta.S != q.theta.S) return p.theta.S < q.theta.S;
    if (p.theta.gamma != q.theta.gamma) return p.theta.gamma < q.theta.gamma;
  }
  return false;
}

}  // namespace

double w1_exact(const PointCloud &a, const PointCloud &b, const ModelConfig &cfg) {
  const std::size_t n = a.points.size();
  if (n != b.points.size())
    throw std::invalid_argument("w1_exact: clouds must have the same size");
  if (n == 0) throw std::invalid_argument("w1_exact: empty clouds");
  if (n > kMaxExactTransportSize) {
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "w1_exact: cloud size %zu exceeds the exact-transport cap %zu", n,
                  kMaxExactTransportSize);
    throw CoverageError(buf);
  }
  const bool swap_args = cloud_lex_less(b, a);
  const PointCloud &lhs = swap_args ? b : a;
  const PointCloud &rhs = swap_args ? a : b;
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cost[i * n + j] = phase_distance(lhs.points[i], rhs.points[j], cfg);
  return solve_assignment(cost, n).cost / static_cast<double>(n);
}

double w1_marginal_1d(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("w1_marginal_1d: samples must have the same size");
  if (a.empty()) throw std::invalid_argument("w1_marginal_1d: empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

std::pair<double, double> fit_loglog_slope(const std::vector<double> &x,
                                           const std::vector<double> &y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2)
    throw std::invalid_argument("fit_loglog_slope: needs two or more (x, y) pairs");
  double mx = 0, my = 0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_loglog_slope: degenerate abscissae");
  const double slope = sxy / sxx;
  if (n == 2) return {slope, 0.0};
  double ssr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double resid = ly[i] - my - slope * (lx[i] - mx);
    ssr += resid * resid;
  }
  return {slope, std::sqrt(ssr / static_cast<double>(n - 2) / sxx)};
}

RateExperiment dudley_rate_experiment(const ModelConfig &cfg,
                                      const std::vector<std::size_t> &sizes,
                                      std::size_t reps, std::uint64_t seed) {
  if (sizes.size() < 2)
    throw std::invalid_argument("dudley_rate_experiment: needs two or more sizes");
  if (reps == 0) throw std::invalid_argument("dudley_rate_experiment: needs repetitions");
  RateExperiment ex;
  ex.sizes = sizes;
  for (std::size_t n : sizes) {
    double acc = 0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      RngStream rng_a = RngStream::substream(seed, "rate", n, 2 * rep);
      RngStream rng_b = RngStream::substream(seed, "rate", n, 2 * rep + 1);
      PointCloud a = initial_cloud(cfg, n, rng_a);
      PointCloud b = initial_cloud(cfg, n, rng_b);
      acc += w1_exact(a, b, cfg);
    }
    ex.mean_w1.push_back(acc / static_cast<double>(reps));
  }
  std::vector<double> xs(sizes.begin(), sizes.end());
  std::tie(ex.slope, ex.slope_stderr) = fit_loglog_slope(xs, ex.mean_w1);
  return ex;
}

double StabilityInputs::envelope(double t) const {
  const double grown = std::exp(2.0 * k.K1 * (1.0 + m1) * t);
  return ((3.0 + 2.0 * m1) * grown - 1.0) / (2.0 * (1.0 + m1));
}

double StabilityInputs::f(double t) const {
  const double env = envelope(t);
  return 2.0 * k.K24 * env * (1.0 + 2.0 * env * (2.0 + r0 + m1));
}

double StabilityInputs::e(double t) const {
  const double env = envelope(t);
  return 2.0 * k.K24 * env * (1.0 + m1 + 4.0 * env * (1.0 + 2.0 * m1 + m1 * m1 + m2));
}

double StabilityInputs::big_f(double t) const {
  return simpson([this](double tau) { return f(tau); }, t);
}

double StabilityInputs::bound(double t, double w1_at_0, std::size_t n) const {
  if (n < 2) throw std::invalid_argument("stability bound: needs at least two plants");
  if (t < 0.0) throw std::invalid_argument("stability bound: negative time");
  if (t == 0.0) return w1_at_0;
  const double total_f = big_f(t);
  if (std::isinf(total_f)) return std::numeric_limits<double>::infinity();
  // e(tau) exp(-F(tau)) decays once F(tau) overflows; treat that tail as zero
  auto integrand = [this](double tau) {
    const double partial = big_f(tau);
    if (std::isinf(partial)) return 0.0;
    return e(tau) * std::exp(-partial);
  };
  const double fluctuation = simpson(integrand, t);
  return std::exp(total_f) * (w1_at_0 + fluctuation / static_cast<double>(n - 1));
}

double dobrushin_bound(double t, const ModelConfig &cfg, double m1, double m2, double r0,
                       double w1_at_0, std::size_t n) {
  StabilityInputs in;
  in.k = theory_constants(cfg);
  in.m1 = m1;
  in.m2 = m2;
  in.r0 = r0;
  return in.bound(t, w1_at_0, n);
}

double support_radius(const ModelConfig &cfg) {
  PhaseVector corner{cfg.R_M, Coordinate::LogSize,
                     Parameters{cfg.L, cfg.L, cfg.S_M, cfg.gamma_M}};
  return phase_norm(corner, cfg);
}

ChaosResult chaos_propagation_test(const FlowApproximation &flow,
                                   const std::vector<std::size_t> &n_values, double t_days,
                                   std::size_t reps, std::uint64_t seed) {
  const ModelConfig &cfg = flow.model;
  if (reps == 0) throw std::invalid_argument("chaos_propagation_test: needs repetitions");
  const double steps_real = t_days / cfg.dt;
  const auto n_iter = static_cast<std::size_t>(std::llround(steps_real));
  if (std::abs(steps_real - static_cast<double>(n_iter)) > 1e-9 * std::max(1.0, steps_real) ||
      n_iter > flow.last_iteration()) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "chaos_propagation_test: time %.17g days is not covered by the "
                  "computed flow iterations",
                  t_days);
    throw CoverageError(buf);
  }

  ChaosResult result;
  result.n_values = n_values;
  result.t_days = t_days;
  RngStream focal_rng = RngStream::substream(seed, "chaos-lead");
  result.focal = sample_parameters(cfg, focal_rng);

  const Interaction g = model_interaction(cfg);
  const double limit_size = gp_reconstruct(result.focal, flow, n_iter, g);

  for (std::size_t count : n_values) {
    if (count < 2)
      throw std::invalid_argument(
          "chaos_propagation_test: the correlation pair needs a competitor (N >= 2)");
    std::vector<double> s_focal(reps), s_second(reps);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      RngStream comp_rng = RngStream::substream(seed, "chaos", count, rep);
      std::vector<Parameters> theta = {result.focal};
      for (std::size_t i = 1; i < count; ++i)
        theta.push_back(sample_parameters(cfg, comp_rng));
      ParticleEnsemble ensemble = make_ensemble(cfg, std::move(theta), cfg.s0);
      for (std::size_t s = 0; s < n_iter; ++s) step(ensemble);
      s_focal[rep] = ensemble.sizes[0];
      s_second[rep] = ensemble.sizes[1];
    }
    double gap = 0;
    for (std::size_t rep = 0; rep < reps; ++rep) gap += std::abs(s_focal[rep] - limit_size);
    result.mean_discrepancy.push_back(gap / static_cast<double>(reps));
    std::optional<double> corr;
    if (reps >= 2) sample_correlation(s_focal, s_second, corr);
    result.pair_correlation.push_back(corr);
  }
  return result;
}

std::pair<double, double> moments(const PointCloud &cloud, const ModelConfig &cfg) {
  if (cloud.points.empty()) throw std::invalid_argument("moments: empty cloud");
  double m1 = 0, m2 = 0;
  for (const PhaseVector &z : cloud.points) {
    const double norm = phase_norm(z, cfg);
    m1 += norm;
    m2 += norm * norm;
  }
  const auto n = static_cast<double>(cloud.points.size());
  return {m1 / n, m2 / n};
}

PointCloud subsample(const PointCloud &cloud, std::size_t count, RngStream &rng) {
  const std::size_t n = cloud.points.size();
  if (count > n) throw std::invalid_argument("subsample: count exceeds the cloud size");
  std::vector<std::size_t> index(n);
  for (std::size_t i = 0; i < n; ++i) index[i] = i;
  PointCloud out;
  out.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(index[i], index[j]);
    out.points.push_back(cloud.points[index[i]]);
  }
  return out;
}

}  // namespace meanfield
