#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "meanfield/model.hpp"
#include "meanfield/rng.hpp"

namespace meanfield {

// Pairwise growth law g(s1, theta1, s2, theta2) in m/day.  The scheme is
// generic in g so tests can substitute degenerate interactions.
using Interaction =
    std::function<double(double, const Parameters &, double, const Parameters &)>;

// The model's own growth law bound to a configuration.
Interaction model_interaction(const ModelConfig &cfg);

// Configuration of the characteristic-flow approximation.
struct SchemeConfig {
  std::size_t ensemble_size = 1000;  // M: interior parameter sample carrying the flow
  std::size_t train_size = 100;      // K: training points of the GP (test set same size)
  std::size_t iterations = 100;      // number of Euler iterations of the flow
  double jitter = 1e-8;              // diagonal regularizer, relative to mean kernel diagonal
  std::uint64_t seed = 1;            // sub-streams: omega-sample / train-set / test-set

  // ensemble_size >= 2 (>= 15 once the quadratic mean is fitted),
  // train_size >= 1, iterations >= 0, jitter >= 0.
  void validate() const;
};

// Quadratic polynomial mean m(theta) = a + b . theta + c . vec(theta theta^T),
// with c the row-major flattening of a symmetric 4x4 coefficient matrix.
struct PolyCoeffs {
  double a = 0;
  std::array<double, 4> b{};
  std::array<double, 16> c{};
  double eval(const Parameters &theta) const;
};

// Full state of the flow approximation after running the scheme: parameter
// sets, per-iteration flow values, fitted means, and GP weights.  Index n
// runs from 0 (initial state, flow identically s0) to `iterations`.
struct FlowApproximation {
  ModelConfig model;
  SchemeConfig scheme;

  std::vector<Parameters> omega;  // size M
  std::vector<Parameters> train;  // size K
  std::vector<Parameters> test;   // size K

  std::vector<std::vector<double>> flow_omega;  // [n][i]
  std::vector<std::vector<double>> flow_train;  // [n][j]
  std::vector<std::vector<double>> flow_test;   // [n][j]

  std::vector<PolyCoeffs> poly;             // [n]; poly[0] = (s0, 0, 0)
  std::vector<std::vector<double>> alpha;   // [n]; empty at n = 0 or when the solve failed
  std::vector<char> gp_ok;                  // [n]; 1 when alpha[n] is usable

  // Root-mean-square reconstruction errors over the test set (metres).
  // J[n] uses the GP reconstruction, J_poly[n] the polynomial mean alone.
  // Missing when the kernel solve failed at n; index 0 is always missing.
  std::vector<std::optional<double>> J;
  std::vector<std::optional<double>> J_poly;

  // Derived cache, never serialized: train_rows[n][j * M + i] holds the
  // kernel row value g(m_{n-1}(train_j), train_j, s_{n-1}(omega_i), omega_i)
  // so reconstruction does not recompute K rows per evaluation.  Empty at
  // n = 0; rebuilt on load.
  std::vector<std::vector<double>> train_rows;

  std::size_t last_iteration() const { return flow_omega.size() - 1; }
};

// Recomputes the train_rows cache of a deserialized state.
void rebuild_kernel_cache(FlowApproximation &state, const Interaction &g);

// One flow iteration: new_flow[p] = flow[p] + (dt/M) sum_i g(flow[p], targets[p],
// omega_flow[i], omega[i]).  The competitor states are always the omega flow
// values; a target belonging to omega keeps its self term.  Throws
// NumericalError (with the offending value) if a non-positive or non-finite
// size is produced.
std::vector<double> induction_step(const std::vector<double> &target_flow,
                                   const std::vector<Parameters> &targets,
                                   const std::vector<double> &omega_flow,
                                   const std::vector<Parameters> &omega, double dt,
                                   const Interaction &g);

// Least-squares quadratic mean of `flow` over `omega` (requires >= 15 points;
// fitted on the 15 unique monomials, then expanded with symmetric halves).
// Throws NumericalError when the design matrix is numerically rank deficient.
PolyCoeffs fit_polynomial_mean(const std::vector<Parameters> &omega,
                               const std::vector<double> &flow);

// Scheme covariance kernel at iteration n >= 1, built from the iteration n-1
// state: k_n(t1, t2) = (dt^2/M) * [ (1/M) sum_i A_i B_i - (1/M^2) (sum A)(sum B) ]
// with A_i = g(m_{n-1}(t1), t1, s_{n-1}(omega_i), omega_i) and B_i likewise.
double kernel(const Parameters &t1, const Parameters &t2, const FlowApproximation &state,
              std::size_t n, const Interaction &g);

// GP reconstruction of the flow at an arbitrary parameter point:
// shat_n(theta) = m_n(theta) + sum_j alpha[n][j] k_n(theta, train[j]).
// n = 0 returns s0 (the flow is constant).  Throws NumericalError naming the
// iteration when the kernel solve failed there.
double gp_reconstruct(const Parameters &theta, const FlowApproximation &state,
                      std::size_t n, const Interaction &g);

// Runs the full scheme: draws omega/train/test once from the seed's
// sub-streams, iterates the flow, fits the polynomial mean, solves the GP
// weights and records J / J_poly per iteration.
FlowApproximation run_scheme(const ModelConfig &cfg, const SchemeConfig &scheme);
FlowApproximation run_scheme(const ModelConfig &cfg, const SchemeConfig &scheme,
                             const Interaction &g);

// `count` sizes shat_n(theta') with theta' drawn i.i.d. from the initial
// parameter law.  n = 0 yields the constant s0.
std::vector<double> sample_mfl(const FlowApproximation &state, std::size_t n,
                               std::size_t count, RngStream &rng);

// Equal-weight log-coordinate cloud (r = log(shat_n/s_m), theta') of `count`
// mean-field samples.  Throws NumericalError if a reconstructed size is not
// strictly positive (the log coordinate would be undefined).
PointCloud sample_mfl_cloud(const FlowApproximation &state, std::size_t n,
                            std::size_t count, RngStream &rng);

}  // namespace meanfield
