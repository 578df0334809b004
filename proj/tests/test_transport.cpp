#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "meanfield/errors.hpp"
#include "meanfield/model.hpp"
#include "meanfield/scheme.hpp"
#include "meanfield/transport.hpp"

using namespace meanfield;

namespace {

PointCloud random_cloud(const ModelConfig &cfg, std::size_t n, std::uint64_t seed,
                        std::uint64_t idx) {
  RngStream rng = RngStream::substream(seed, "test-cloud", idx);
  PointCloud cloud = initial_cloud(cfg, n, rng);
  // spread the log-sizes so the clouds are not concentrated on one r value
  for (std::size_t i = 0; i < n; ++i)
    cloud.points[i].state += rng.uniform(0.0, 2.0);
  return cloud;
}

double brute_force_w1(const PointCloud &a, const PointCloud &b, const ModelConfig &cfg) {
  std::vector<std::size_t> perm = {0, 1, 2};
  double best = std::numeric_limits<double>::infinity();
  do {
    double acc = 0;
    for (std::size_t i = 0; i < 3; ++i)
      acc += phase_distance(a.points[i], b.points[perm[i]], cfg);
    best = std::min(best, acc / 3.0);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Recursive Simpson quadrature, independent of the library's fixed-panel rule.
double adaptive_simpson(const std::function<double(double)> &f, double a, double b,
                        double eps, double whole, double fa, double fb, double fm,
                        int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, eps / 2, left, fa, fm, flm, depth - 1) +
         adaptive_simpson(f, m, b, eps / 2, right, fm, fb, frm, depth - 1);
}

double integrate(const std::function<double(double)> &f, double a, double b, double eps) {
  if (a == b) return 0.0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, eps, whole, fa, fb, fm, 40);
}

}  // namespace

TEST_CASE("assignment solver: identity, swap, and 3x3 brute force") {
  AssignmentResult one = solve_assignment({5.0}, 1);
  CHECK(one.cost == 5.0);
  CHECK(one.match == std::vector<std::size_t>{0});

  AssignmentResult ident = solve_assignment({0.0, 1.0, 1.0, 0.0}, 2);
  CHECK(ident.cost == 0.0);
  CHECK(ident.match == std::vector<std::size_t>{0, 1});

  AssignmentResult swap = solve_assignment({1.0, 0.0, 0.0, 1.0}, 2);
  CHECK(swap.cost == 0.0);
  CHECK(swap.match == std::vector<std::size_t>{1, 0});

  RngStream rng = RngStream::substream(3, "assignment");
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> cost(9);
    for (double &c : cost) c = rng.uniform01();
    AssignmentResult got = solve_assignment(cost, 3);
    std::vector<std::size_t> perm = {0, 1, 2};
    double best = std::numeric_limits<double>::infinity();
    do {
      best = std::min(best, cost[0 * 3 + perm[0]] + cost[1 * 3 + perm[1]] +
                                cost[2 * 3 + perm[2]]);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(got.cost == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("exact W1: coincidence, singletons, brute force, metric axioms") {
  ModelConfig cfg = default_config();
  PointCloud a = random_cloud(cfg, 3, 5, 0);
  CHECK(w1_exact(a, a, cfg) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));

  PointCloud sa, sb;
  sa.points = {a.points[0]};
  sb.points = {a.points[1]};
  CHECK(w1_exact(sa, sb, cfg) ==
        doctest::Approx(phase_distance(a.points[0], a.points[1], cfg)).epsilon(1e-14));

  for (int trial = 0; trial < 20; ++trial) {
    PointCloud x = random_cloud(cfg, 3, 7, 2 * trial);
    PointCloud y = random_cloud(cfg, 3, 7, 2 * trial + 1);
    CHECK(w1_exact(x, y, cfg) == doctest::Approx(brute_force_w1(x, y, cfg)).epsilon(1e-12));
  }

  for (int trial = 0; trial < 100; ++trial) {
    PointCloud x = random_cloud(cfg, 20, 11, 3 * trial);
    PointCloud y = random_cloud(cfg, 20, 11, 3 * trial + 1);
    PointCloud z = random_cloud(cfg, 20, 11, 3 * trial + 2);
    double xy = w1_exact(x, y, cfg);
    double yz = w1_exact(y, z, cfg);
    double xz = w1_exact(x, z, cfg);
    CHECK(xy == doctest::Approx(w1_exact(y, x, cfg)).epsilon(1e-12));
    CHECK(xz <= xy + yz + 1e-12);
    CHECK(xy >= 0.0);
  }

  PointCloud small = random_cloud(cfg, 2, 13, 0);
  CHECK_THROWS_AS(w1_exact(a, small, cfg), std::invalid_argument);

  PointCloud big_a, big_b;
  big_a.points.assign(kMaxExactTransportSize + 1, a.points[0]);
  big_b.points.assign(kMaxExactTransportSize + 1, a.points[1]);
  CHECK_THROWS_AS(w1_exact(big_a, big_b, cfg), CoverageError);
}

TEST_CASE("1-d marginal W1 and its lower-bound relation to the exact distance") {
  CHECK(w1_marginal_1d({0.0, 1.0}, {0.0, 3.0}) == doctest::Approx(1.0));
  CHECK(w1_marginal_1d({1.0, 3.0}, {3.0, 1.0}) == doctest::Approx(0.0));
  CHECK(w1_marginal_1d({2.0}, {5.0}) == doctest::Approx(3.0));
  CHECK_THROWS_AS(w1_marginal_1d({1.0}, {1.0, 2.0}), std::invalid_argument);

  ModelConfig cfg = default_config();
  for (int trial = 0; trial < 20; ++trial) {
    PointCloud x = random_cloud(cfg, 30, 17, 2 * trial);
    PointCloud y = random_cloud(cfg, 30, 17, 2 * trial + 1);
    std::vector<double> rx, ry;
    for (std::size_t i = 0; i < 30; ++i) {
      rx.push_back(x.points[i].state);
      ry.push_back(y.points[i].state);
    }
    CHECK(w1_marginal_1d(rx, ry) <= w1_exact(x, y, cfg) + 1e-12);
  }
}

TEST_CASE("log-log slope fit recovers an exact power law") {
  std::vector<double> x = {10, 100, 1000, 10000};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.5));
  auto [slope, stderr_] = fit_loglog_slope(x, y);
  CHECK(slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(stderr_ <= 1e-10);
  CHECK_THROWS_AS(fit_loglog_slope({1.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("sampling-rate experiment: positive, decreasing in N") {
  ModelConfig cfg = default_config();
  RateExperiment ex = dudley_rate_experiment(cfg, {32, 64, 128}, 5, 2026);
  REQUIRE(ex.mean_w1.size() == 3);
  for (double v : ex.mean_w1) CHECK(v > 0.0);
  CHECK(ex.mean_w1[1] < ex.mean_w1[0]);
  CHECK(ex.mean_w1[2] < ex.mean_w1[1]);
  CHECK(ex.slope < 0.0);

  // determinism
  RateExperiment again = dudley_rate_experiment(cfg, {32, 64, 128}, 5, 2026);
  CHECK(again.mean_w1 == ex.mean_w1);
}

TEST_CASE("stability bound: time zero, envelope start, finite-regime oracle") {
  ModelConfig cfg = default_config();

  StabilityInputs small;
  small.k.K1 = 0.2;
  small.k.K24 = 0.5;
  small.m1 = 0.1;
  small.m2 = 0.02;
  small.r0 = 0.5;

  CHECK(small.envelope(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(small.envelope(1.0) > small.envelope(0.5));
  CHECK(small.f(0.7) > 0.0);
  CHECK(small.e(0.7) > 0.0);
  CHECK(small.big_f(0.0) == 0.0);

  // the bound at t = 0 is exactly the measured initial distance
  CHECK(small.bound(0.0, 0.123456, 101) == 0.123456);
  CHECK(dobrushin_bound(0.0, cfg, 26.0, 900.0, 7.2, 0.05, 101) == 0.05);

  // independent adaptive-quadrature oracle in the finite regime
  auto f_fn = [&](double t) { return small.f(t); };
  for (double t : {0.3, 0.7, 1.0}) {
    double oracle_F = integrate(f_fn, 0.0, t, 1e-12);
    CHECK(small.big_f(t) == doctest::Approx(oracle_F).epsilon(1e-8));
  }
  const double w1_0 = 0.05;
  const std::size_t n = 101;
  for (double t : {0.3, 1.0}) {
    auto inner = [&](double tau) {
      return small.e(tau) * std::exp(-integrate(f_fn, 0.0, tau, 1e-12));
    };
    double oracle = std::exp(integrate(f_fn, 0.0, t, 1e-12)) *
                    (w1_0 + integrate(inner, 0.0, t, 1e-10) / double(n - 1));
    CHECK(small.bound(t, w1_0, n) == doctest::Approx(oracle).epsilon(1e-6));
  }

  // monotone growth in t, decay in N
  CHECK(small.bound(1.0, w1_0, n) > small.bound(0.5, w1_0, n));
  CHECK(small.bound(1.0, w1_0, 1001) < small.bound(1.0, w1_0, 11));

  // the reference-configuration moments overflow the double exponential:
  // the bound is +infinity (and never NaN)
  double huge = dobrushin_bound(1.0, cfg, 26.0, 900.0, 7.2, 0.05, 101);
  CHECK(std::isinf(huge));
  CHECK(huge > 0.0);
  double later = dobrushin_bound(10.0, cfg, 26.0, 900.0, 7.2, 0.05, 101);
  CHECK(std::isinf(later));
  CHECK_FALSE(std::isnan(later));
}

TEST_CASE("support radius is the phase norm of the domain corner") {
  ModelConfig cfg = default_config();
  double expected = cfg.R_M + 2.0 + cfg.S_M / cfg.s_m + cfg.gamma_M / cfg.gamma_m;
  CHECK(support_radius(cfg) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("chaos propagation harness: shared focal plant, determinism, edge cases") {
  ModelConfig cfg = default_config();
  SchemeConfig sc;
  sc.ensemble_size = 60;
  sc.train_size = 12;
  sc.iterations = 50;
  sc.seed = 8;
  FlowApproximation flow = run_scheme(cfg, sc);

  ChaosResult one = chaos_propagation_test(flow, {5, 11}, 5.0, 1, 99);
  REQUIRE(one.n_values.size() == 2);
  CHECK_FALSE(one.pair_correlation[0].has_value());
  CHECK_FALSE(one.pair_correlation[1].has_value());
  for (double d : one.mean_discrepancy) CHECK(d >= 0.0);

  ChaosResult more = chaos_propagation_test(flow, {5, 11}, 5.0, 4, 99);
  for (auto &c : more.pair_correlation)
    if (c.has_value()) CHECK(std::abs(c.value()) <= 1.0 + 1e-12);
  CHECK(more.focal.S == one.focal.S);  // the focal plant depends on the seed only
  RngStream focal_rng = RngStream::substream(99, "chaos-lead");
  Parameters drawn = sample_parameters(cfg, focal_rng);
  CHECK(more.focal.x == drawn.x);
  CHECK(more.focal.gamma == drawn.gamma);

  ChaosResult again = chaos_propagation_test(flow, {5, 11}, 5.0, 4, 99);
  CHECK(again.mean_discrepancy == more.mean_discrepancy);

  // a time outside the computed iterations cannot be compared
  CHECK_THROWS_AS(chaos_propagation_test(flow, {5}, 50.0, 2, 99), CoverageError);
  CHECK_THROWS_AS(chaos_propagation_test(flow, {5}, 0.123, 2, 99), CoverageError);
}

TEST_CASE("cloud moments: hand values and Monte Carlo convergence rate") {
  ModelConfig cfg = default_config();

  PointCloud two;
  Parameters base{0.0, 0.0, cfg.s_m, cfg.gamma_m};  // norm contribution 1 + 1
  two.points = {PhaseVector{0.0, Coordinate::LogSize, base},
                PhaseVector{1.0, Coordinate::LogSize, base}};
  auto [m1, m2] = moments(two, cfg);
  CHECK(m1 == doctest::Approx((2.0 + 3.0) / 2.0).epsilon(1e-14));
  CHECK(m2 == doctest::Approx((4.0 + 9.0) / 2.0).epsilon(1e-14));

  PointCloud empty;
  CHECK_THROWS_AS(moments(empty, cfg), std::invalid_argument);

  // large-sample oracle for the initial-law moments
  RngStream ref_rng = RngStream::substream(7, "moments-oracle");
  PointCloud ref = initial_cloud(cfg, 1000000, ref_rng);
  auto [ref_m1, ref_m2] = moments(ref, cfg);
  CHECK(ref_m1 > 0.0);
  CHECK(ref_m2 > ref_m1);

  // the empirical first moment approaches the oracle at the Monte Carlo rate
  std::vector<std::size_t> sizes = {100, 400, 1600, 6400};
  std::vector<double> deviation;
  const int reps = 40;
  for (std::size_t nsize : sizes) {
    double acc = 0;
    for (int rep = 0; rep < reps; ++rep) {
      RngStream rng = RngStream::substream(7, "moments-oracle", nsize, rep + 1);
      PointCloud cloud = initial_cloud(cfg, nsize, rng);
      acc += std::abs(moments(cloud, cfg).first - ref_m1);
    }
    deviation.push_back(acc / reps);
  }
  std::vector<double> xs(sizes.begin(), sizes.end());
  auto [slope, stderr_] = fit_loglog_slope(xs, deviation);
  CHECK(slope == doctest::Approx(-0.5).epsilon(0.3));  // -0.5 +/- 0.15
  CHECK(stderr_ < 0.2);
}

TEST_CASE("deterministic subsampling without replacement") {
  ModelConfig cfg = default_config();
  PointCloud cloud = random_cloud(cfg, 50, 21, 0);

  RngStream a = RngStream::substream(4, "subsample");
  PointCloud picked = subsample(cloud, 20, a);
  REQUIRE(picked.points.size() == 20);
  for (const auto &p : picked.points) {
    bool member = false;
    for (const auto &q : cloud.points)
      member = member || (p.state == q.state && p.theta.x == q.theta.x &&
                          p.theta.y == q.theta.y && p.theta.S == q.theta.S &&
                          p.theta.gamma == q.theta.gamma);
    CHECK(member);
  }
  // no duplicates: all source indices distinct
  for (std::size_t i = 0; i < picked.points.size(); ++i)
    for (std::size_t j = i + 1; j < picked.points.size(); ++j)
      CHECK_FALSE(picked.points[i].state == picked.points[j].state);

  RngStream b = RngStream::substream(4, "subsample");
  PointCloud same = subsample(cloud, 20, b);
  CHECK(same.points.size() == 20);
  for (std::size_t i = 0; i < 20; ++i)
    CHECK(same.points[i].state == picked.points[i].state);

  RngStream c = RngStream::substream(4, "subsample");
  CHECK(subsample(cloud, 0, c).points.empty());
  CHECK_THROWS_AS(subsample(cloud, 51, c), std::invalid_argument);
}
