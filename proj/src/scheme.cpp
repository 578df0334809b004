#include "meanfield/scheme.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <stdexcept>
#include <utility>

#include "meanfield/errors.hpp"
#include "meanfield/parallel.hpp"

namespace meanfield {

namespace {

std::string format_message(const char *fmt, double value, std::size_t index) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, value, index);
  return buf;
}

std::string iteration_message(const char *prefix, std::size_t n) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s%zu", prefix, n);
  return buf;
}

// The covariance kernel entry for two rows of competitor interactions,
// evaluated in this exact association: (dt^2/M) [ dot/M - (sum)(sum)/M^2 ].
double scaled_empirical_covariance(const double *a, const double *b, std::size_t m,
                                   double dt) {
  double dot = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    dot += a[i] * b[i];
    sum_a += a[i];
    sum_b += b[i];
  }
  const double dm = static_cast<double>(m);
  return dt * dt / dm * (dot / dm - sum_a * sum_b / (dm * dm));
}

// Row of interactions of a reconstruction point against the iteration n-1
// omega flow: row[i] = g(m_{n-1}(theta), theta, s_{n-1}(omega_i), omega_i).
std::vector<double> kernel_row(const Parameters &theta, const FlowApproximation &state,
                               std::size_t n, const Interaction &g) {
  const std::vector<double> &old_flow = state.flow_omega[n - 1];
  const double mean_value = state.poly[n - 1].eval(theta);
  std::vector<double> row(old_flow.size());
  for (std::size_t i = 0; i < old_flow.size(); ++i)
    row[i] = g(mean_value, theta, old_flow[i], state.omega[i]);
  return row;
}

std::vector<double> cached_or_fresh_rows(const FlowApproximation &state, std::size_t n,
                                         const Interaction &g) {
  const std::size_t m = state.omega.size();
  const std::size_t k = state.train.size();
  if (n < state.train_rows.size() && state.train_rows[n].size() == k * m)
    return state.train_rows[n];
  std::vector<double> rows(k * m);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> row = kernel_row(state.train[j], state, n, g);
    std::copy(row.begin(), row.end(), rows.begin() + j * m);
  }
  return rows;
}

double reconstruct_with_rows(const Parameters &theta, const FlowApproximation &state,
                             std::size_t n, const Interaction &g,
                             const std::vector<double> &rows) {
  const std::size_t m = state.omega.size();
  std::vector<double> row = kernel_row(theta, state, n, g);
  double acc = state.poly[n].eval(theta);
  for (std::size_t j = 0; j < state.alpha[n].size(); ++j)
    acc += state.alpha[n][j] *
           scaled_empirical_covariance(row.data(), rows.data() + j * m, m, state.model.dt);
  return acc;
}

}  // namespace

void SchemeConfig::validate() const {
  if (ensemble_size < 2)
    throw ConfigError("invalid scheme config: ensemble_size must be at least 2");
  if (train_size < 1) throw ConfigError("invalid scheme config: train_size must be positive");
  if (!(jitter >= 0.0) || !std::isfinite(jitter))
    throw ConfigError("invalid scheme config: jitter must be finite and non-negative");
}

double PolyCoeffs::eval(const Parameters &theta) const {
  const double th[4] = {theta.x, theta.y, theta.S, theta.gamma};
  double acc = a;
  for (int i = 0; i < 4; ++i) acc += b[i] * th[i];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) acc += c[i * 4 + j] * th[i] * th[j];
  return acc;
}

Interaction model_interaction(const ModelConfig &cfg) {
  return [cfg](double s1, const Parameters &t1, double s2, const Parameters &t2) {
    if (!std::isfinite(s1) || !(s1 > 0.0) || !std::isfinite(s2) || !(s2 > 0.0))
      throw NumericalError("interaction requires strictly positive finite sizes");
    const double ls1 = std::log(s1 / cfg.s_m);
    const double ls2 = std::log(s2 / cfg.s_m);
    const double r_eq = std::log(t1.S / cfg.s_m);
    const double dx = t1.x - t2.x;
    const double dy = t1.y - t2.y;
    return s1 * detail::pair_growth(ls1, r_eq, t1.gamma, ls2, dx * dx + dy * dy, cfg).growth_r;
  };
}

std::vector<double> induction_step(const std::vector<double> &target_flow,
                                   const std::vector<Parameters> &targets,
                                   const std::vector<double> &omega_flow,
                                   const std::vector<Parameters> &omega, double dt,
                                   const Interaction &g) {
  if (target_flow.size() != targets.size())
    throw std::invalid_argument("induction_step: target flow/parameter size mismatch");
  if (omega_flow.size() != omega.size())
    throw std::invalid_argument("induction_step: omega flow/parameter size mismatch");
  if (omega.empty()) throw std::invalid_argument("induction_step: empty omega sample");

  const std::size_t m = omega.size();
  std::vector<double> next(targets.size());
  std::exception_ptr failure;
  std::mutex failure_mutex;
  parallel_for(targets.size(), [&](std::size_t p) {
    try {
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i)
        acc += g(target_flow[p], targets[p], omega_flow[i], omega[i]);
      const double value = target_flow[p] + dt / static_cast<double>(m) * acc;
      if (!std::isfinite(value) || value <= 0.0)
        throw NumericalError(format_message(
            "flow value became non-positive or non-finite (%.17g) for target %zu", value, p));
      next[p] = value;
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  });
  if (failure) std::rethrow_exception(failure);
  return next;
}

PolyCoeffs fit_polynomial_mean(const std::vector<Parameters> &omega,
                               const std::vector<double> &flow) {
  constexpr int kTerms = 15;  // 1 + 4 linear + 10 unique quadratic monomials
  if (omega.size() != flow.size())
    throw std::invalid_argument("fit_polynomial_mean: flow/parameter size mismatch");
  if (omega.size() < kTerms)
    throw std::invalid_argument("fit_polynomial_mean: needs at least 15 sample points");

  Eigen::MatrixXd design(omega.size(), kTerms);
  Eigen::VectorXd rhs(omega.size());
  for (std::size_t p = 0; p < omega.size(); ++p) {
    const double th[4] = {omega[p].x, omega[p].y, omega[p].S, omega[p].gamma};
    design(p, 0) = 1.0;
    for (int i = 0; i < 4; ++i) design(p, 1 + i) = th[i];
    int col = 5;
    for (int i = 0; i < 4; ++i)
      for (int j = i; j < 4; ++j) design(p, col++) = th[i] * th[j];
    rhs(p) = flow[p];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < kTerms)
    throw NumericalError("fit_polynomial_mean: design matrix is numerically rank deficient");
  Eigen::VectorXd beta = qr.solve(rhs);

  PolyCoeffs out;
  out.a = beta(0);
  for (int i = 0; i < 4; ++i) out.b[i] = beta(1 + i);
  int col = 5;
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      const double q = beta(col++);
      if (i == j) {
        out.c[i * 4 + i] = q;
      } else {
        out.c[i * 4 + j] = q / 2.0;
        out.c[j * 4 + i] = q / 2.0;
      }
    }
  return out;
}

double kernel(const Parameters &t1, const Parameters &t2, const FlowApproximation &state,
              std::size_t n, const Interaction &g) {
  if (n == 0 || n - 1 >= state.flow_omega.size() || n - 1 >= state.poly.size())
    throw std::out_of_range("kernel: iteration index out of range");
  std::vector<double> row_a = kernel_row(t1, state, n, g);
  std::vector<double> row_b = kernel_row(t2, state, n, g);
  return scaled_empirical_covariance(row_a.data(), row_b.data(), row_a.size(),
                                     state.model.dt);
}

double gp_reconstruct(const Parameters &theta, const FlowApproximation &state,
                      std::size_t n, const Interaction &g) {
  if (n > state.last_iteration())
    throw std::out_of_range("gp_reconstruct: iteration index out of range");
  if (n == 0) return state.model.s0;
  if (!state.gp_ok[n])
    throw NumericalError(
        iteration_message("flow reconstruction unavailable: kernel solve failed at iteration ", n));
  return reconstruct_with_rows(theta, state, n, g, cached_or_fresh_rows(state, n, g));
}

void rebuild_kernel_cache(FlowApproximation &state, const Interaction &g) {
  const std::size_t m = state.omega.size();
  const std::size_t k = state.train.size();
  state.train_rows.assign(state.flow_omega.size(), {});
  for (std::size_t n = 1; n < state.flow_omega.size(); ++n) {
    std::vector<double> rows(k * m);
    parallel_for(k, [&](std::size_t j) {
      std::vector<double> row = kernel_row(state.train[j], state, n, g);
      std::copy(row.begin(), row.end(), rows.begin() + j * m);
    });
    state.train_rows[n] = std::move(rows);
  }
}

FlowApproximation run_scheme(const ModelConfig &cfg, const SchemeConfig &scheme) {
  return run_scheme(cfg, scheme, model_interaction(cfg));
}

FlowApproximation run_scheme(const ModelConfig &cfg, const SchemeConfig &scheme,
                             const Interaction &g) {
  cfg.validate();
  scheme.validate();
  const std::size_t m = scheme.ensemble_size;
  const std::size_t k = scheme.train_size;

  FlowApproximation state;
  state.model = cfg;
  state.scheme = scheme;

  RngStream omega_rng = RngStream::substream(scheme.seed, "omega-sample");
  RngStream train_rng = RngStream::substream(scheme.seed, "train-set");
  RngStream test_rng = RngStream::substream(scheme.seed, "test-set");
  for (std::size_t i = 0; i < m; ++i) state.omega.push_back(sample_parameters(cfg, omega_rng));
  for (std::size_t j = 0; j < k; ++j) state.train.push_back(sample_parameters(cfg, train_rng));
  for (std::size_t j = 0; j < k; ++j) state.test.push_back(sample_parameters(cfg, test_rng));

  state.flow_omega.push_back(std::vector<double>(m, cfg.s0));
  state.flow_train.push_back(std::vector<double>(k, cfg.s0));
  state.flow_test.push_back(std::vector<double>(k, cfg.s0));
  PolyCoeffs constant;
  constant.a = cfg.s0;
  state.poly.push_back(constant);
  state.alpha.push_back({});
  state.gp_ok.push_back(0);
  state.J.push_back(std::nullopt);
  state.J_poly.push_back(std::nullopt);
  state.train_rows.push_back({});

  for (std::size_t n = 1; n <= scheme.iterations; ++n) {
    const std::vector<double> &old_omega = state.flow_omega[n - 1];
    std::vector<double> new_omega, new_train, new_test;
    try {
      new_omega = induction_step(old_omega, state.omega, old_omega, state.omega, cfg.dt, g);
      new_train = induction_step(state.flow_train[n - 1], state.train, old_omega,
                                 state.omega, cfg.dt, g);
      new_test = induction_step(state.flow_test[n - 1], state.test, old_omega, state.omega,
                                cfg.dt, g);
    } catch (const NumericalError &err) {
      throw NumericalError(iteration_message("flow iteration ", n) + " failed: " +
                           std::string(err.what()));
    }
    state.poly.push_back(fit_polynomial_mean(state.omega, new_omega));

    // kernel rows of the training points against the iteration n-1 state
    std::vector<double> rows(k * m);
    parallel_for(k, [&](std::size_t j) {
      std::vector<double> row = kernel_row(state.train[j], state, n, g);
      std::copy(row.begin(), row.end(), rows.begin() + j * m);
    });

    Eigen::MatrixXd kmat(k, k);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a; b < k; ++b) {
        const double v = scaled_empirical_covariance(rows.data() + a * m,
                                                     rows.data() + b * m, m, cfg.dt);
        kmat(a, b) = v;
        kmat(b, a) = v;
      }
    const double mean_diag = kmat.trace() / static_cast<double>(k);
    Eigen::MatrixXd system = kmat;
    system.diagonal().array() += scheme.jitter * mean_diag;

    Eigen::VectorXd rhs(k);
    for (std::size_t j = 0; j < k; ++j)
      rhs(j) = new_train[j] - state.poly[n].eval(state.train[j]);

    bool ok = false;
    Eigen::VectorXd weights;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
    if (ldlt.info() == Eigen::Success) {
      weights = ldlt.solve(rhs);
      const double residual = (system * weights - rhs).lpNorm<Eigen::Infinity>();
      const double scale = rhs.lpNorm<Eigen::Infinity>();
      ok = weights.allFinite() && residual <= 1e-6 * scale + 1e-300;
    }

    state.flow_omega.push_back(std::move(new_omega));
    state.flow_train.push_back(std::move(new_train));
    state.flow_test.push_back(std::move(new_test));
    state.train_rows.push_back(std::move(rows));
    state.gp_ok.push_back(ok ? 1 : 0);
    state.alpha.push_back(ok ? std::vector<double>(weights.data(), weights.data() + k)
                             : std::vector<double>());

    double poly_sq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double d = state.poly[n].eval(state.test[j]) - state.flow_test[n][j];
      poly_sq += d * d;
    }
    state.J_poly.push_back(std::sqrt(poly_sq / static_cast<double>(k)));

    if (ok) {
      double gp_sq = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double d = gp_reconstruct(state.test[j], state, n, g) - state.flow_test[n][j];
        gp_sq += d * d;
      }
      state.J.push_back(std::sqrt(gp_sq / static_cast<double>(k)));
    } else {
      state.J.push_back(std::nullopt);
    }
  }
  return state;
}

std::vector<double> sample_mfl(const FlowApproximation &state, std::size_t n,
                               std::size_t count, RngStream &rng) {
  if (n > state.last_iteration())
    throw std::out_of_range("sample_mfl: iteration index out of range");
  const Interaction g = model_interaction(state.model);
  const std::vector<double> rows = n == 0 ? std::vector<double>()
                                          : cached_or_fresh_rows(state, n, g);
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Parameters theta = sample_parameters(state.model, rng);
    if (n == 0) {
      out.push_back(state.model.s0);
    } else {
      if (!state.gp_ok[n])
        throw NumericalError(iteration_message(
            "flow reconstruction unavailable: kernel solve failed at iteration ", n));
      out.push_back(reconstruct_with_rows(theta, state, n, g, rows));
    }
  }
  return out;
}

PointCloud sample_mfl_cloud(const FlowApproximation &state, std::size_t n,
                            std::size_t count, RngStream &rng) {
  if (n > state.last_iteration())
    throw std::out_of_range("sample_mfl_cloud: iteration index out of range");
  const Interaction g = model_interaction(state.model);
  const std::vector<double> rows = n == 0 ? std::vector<double>()
                                          : cached_or_fresh_rows(state, n, g);
  PointCloud cloud;
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Parameters theta = sample_parameters(state.model, rng);
    double size = state.model.s0;
    if (n > 0) {
      if (!state.gp_ok[n])
        throw NumericalError(iteration_message(
            "flow reconstruction unavailable: kernel solve failed at iteration ", n));
      size = reconstruct_with_rows(theta, state, n, g, rows);
    }
    if (!(size > 0.0) || !std::isfinite(size))
      throw NumericalError(format_message(
          "reconstructed size is not strictly positive (%.17g) for sample %zu", size, i));
    cloud.points.push_back(PhaseVector{std::log(size / state.model.s_m),
                                       Coordinate::LogSize, theta});
  }
  return cloud;
}

}  // namespace meanfield
