#include "meanfield/model.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "meanfield/errors.hpp"

namespace meanfield {

namespace detail {

PairGrowth pair_growth(double ls1, double R1, double gamma1, double ls2, double d2,
                       const ModelConfig &cfg) {
  double c = ls2 / (2.0 * cfg.R_M * (1.0 + d2 / (cfg.sigma_x * cfg.sigma_x))) *
             (1.0 + std::tanh((ls2 - ls1) / cfg.sigma_r));
  return PairGrowth{gamma1 * (R1 * (1.0 - c) - ls1), c};
}

}  // namespace detail

double competition_factor(double s1, double s2, double d, const ModelConfig &cfg) {
  if (!(s1 > 0.0) || !(s2 > 0.0))
    throw std::invalid_argument("competition_factor: sizes must be positive");
  double ls1 = std::log(s1 / cfg.s_m);
  double ls2 = std::log(s2 / cfg.s_m);
  return detail::pair_growth(ls1, 0.0, 0.0, ls2, d * d, cfg).competition;
}

static void require_finite(const PhaseVector &z, const char *where) {
  if (!std::isfinite(z.state) || !std::isfinite(z.theta.x) || !std::isfinite(z.theta.y) ||
      !std::isfinite(z.theta.S) || !std::isfinite(z.theta.gamma))
    throw std::invalid_argument(std::string(where) + ": non-finite input");
}

double interaction_s(const PhaseVector &z1, const PhaseVector &z2, const ModelConfig &cfg) {
  require_finite(z1, "interaction_s");
  require_finite(z2, "interaction_s");
  if (z1.coord != Coordinate::Size || z2.coord != Coordinate::Size)
    throw std::invalid_argument("interaction_s: expects size-coordinate inputs");
  if (!(z1.state > 0.0) || !(z2.state > 0.0))
    throw std::invalid_argument("interaction_s: sizes must be positive");
  double dx = z1.theta.x - z2.theta.x;
  double dy = z1.theta.y - z2.theta.y;
  double ls1 = std::log(z1.state / cfg.s_m);
  double ls2 = std::log(z2.state / cfg.s_m);
  double R1 = std::log(z1.theta.S / cfg.s_m);
  return z1.state *
         detail::pair_growth(ls1, R1, z1.theta.gamma, ls2, dx * dx + dy * dy, cfg).growth_r;
}

double interaction_r(const PhaseVector &z1, const PhaseVector &z2, const ModelConfig &cfg) {
  require_finite(z1, "interaction_r");
  require_finite(z2, "interaction_r");
  if (z1.coord != Coordinate::LogSize || z2.coord != Coordinate::LogSize)
    throw std::invalid_argument("interaction_r: expects log-coordinate inputs");
  double dx = z1.theta.x - z2.theta.x;
  double dy = z1.theta.y - z2.theta.y;
  double R1 = std::log(z1.theta.S / cfg.s_m);
  return detail::pair_growth(z1.state, R1, z1.theta.gamma, z2.state, dx * dx + dy * dy, cfg)
      .growth_r;
}

PhaseVector to_log(const PhaseVector &z, const ModelConfig &cfg) {
  if (z.coord == Coordinate::LogSize) return z;
  if (!(z.state > 0.0)) throw std::invalid_argument("to_log: size must be positive");
  return PhaseVector{std::log(z.state / cfg.s_m), Coordinate::LogSize, z.theta};
}

PhaseVector to_size(const PhaseVector &z, const ModelConfig &cfg) {
  if (z.coord == Coordinate::Size) return z;
  return PhaseVector{cfg.s_m * std::exp(z.state), Coordinate::Size, z.theta};
}

double phase_norm(const PhaseVector &z, const ModelConfig &cfg) {
  if (z.coord != Coordinate::LogSize)
    throw std::invalid_argument("phase_norm: expects a log-coordinate vector");
  return std::abs(z.state) + (std::abs(z.theta.x) + std::abs(z.theta.y)) / cfg.L +
         std::abs(z.theta.S) / cfg.s_m + std::abs(z.theta.gamma) / cfg.gamma_m;
}

double phase_distance(const PhaseVector &a, const PhaseVector &b, const ModelConfig &cfg) {
  if (a.coord != Coordinate::LogSize || b.coord != Coordinate::LogSize)
    throw std::invalid_argument("phase_distance: expects log-coordinate vectors");
  return std::abs(a.state - b.state) +
         (std::abs(a.theta.x - b.theta.x) + std::abs(a.theta.y - b.theta.y)) / cfg.L +
         std::abs(a.theta.S - b.theta.S) / cfg.s_m +
         std::abs(a.theta.gamma - b.theta.gamma) / cfg.gamma_m;
}

bool in_domain(const PhaseVector &z, const ModelConfig &cfg) {
  PhaseVector r = (z.coord == Coordinate::LogSize) ? z : to_log(z, cfg);
  const Parameters &th = r.theta;
  return r.state > 0.0 && r.state <= std::log(th.S / cfg.s_m) && th.x >= 0.0 &&
         th.x <= cfg.L && th.y >= 0.0 && th.y <= cfg.L && th.S >= cfg.S_m &&
         th.S <= cfg.S_M && th.gamma >= cfg.gamma_m && th.gamma <= cfg.gamma_M;
}

Parameters sample_parameters(const ModelConfig &cfg, RngStream &rng) {
  Parameters th;
  th.x = cfg.L * rng.uniform01();
  th.y = cfg.L * rng.uniform01();
  th.S = cfg.S_lower(th.x) + cfg.sigma_S * rng.uniform01();
  th.gamma = cfg.gamma_lower(th.y) + cfg.sigma_gamma * rng.uniform01();
  return th;
}

std::vector<PhaseVector> sample_initial(const ModelConfig &cfg, std::size_t count,
                                        RngStream &rng) {
  cfg.validate();
  std::vector<PhaseVector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(PhaseVector{cfg.s0, Coordinate::Size, sample_parameters(cfg, rng)});
  return out;
}

PointCloud initial_cloud(const ModelConfig &cfg, std::size_t count, RngStream &rng) {
  cfg.validate();
  const double r0 = std::log(cfg.s0 / cfg.s_m);
  PointCloud cloud;
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    cloud.points.push_back(PhaseVector{r0, Coordinate::LogSize, sample_parameters(cfg, rng)});
  return cloud;
}

LipschitzConstants theory_constants(const ModelConfig &cfg) {
  LipschitzConstants k;
  k.K1 = cfg.gamma_M * std::max(1.0, cfg.R_M);
  k.K2 = cfg.gamma_M * std::max(1.0, 1.0 / (4.0 * cfg.sigma_r));
  k.K3 = cfg.gamma_M * std::max(1.0, 1.0 / (2.0 * cfg.sigma_r));
  k.K4 = cfg.gamma_M *
         std::max(2.0 + cfg.R_M, 1.0 + 2.0 * cfg.L * cfg.L / (cfg.sigma_x * cfg.sigma_x));
  k.K24 = k.K2 + k.K4;
  return k;
}

double gompertz_size(double t, double s0, double S, double gamma) {
  return S * std::exp(-std::exp(-gamma * t) * std::log(S / s0));
}

void ModelConfig::validate() const {
  auto fail = [](const std::string &msg) { throw ConfigError("invalid config: " + msg); };
  if (!(L > 0.0)) fail("L must be positive");
  if (!(s_m > 0.0)) fail("s_m must be positive");
  if (!(S_m > 0.0)) fail("S_m must be positive");
  if (!(sigma_S > 0.0)) fail("sigma_S must be positive");
  if (!(S_m + sigma_S < S_M)) fail("S_m + sigma_S must stay below S_M");
  if (!(gamma_m > 0.0)) fail("gamma_m must be positive");
  if (!(sigma_gamma > 0.0)) fail("sigma_gamma must be positive");
  if (!(gamma_m + sigma_gamma < gamma_M)) fail("gamma_m + sigma_gamma must stay below gamma_M");
  if (!(R_M >= std::log(S_M / s_m))) fail("R_M must be at least log(S_M / s_m)");
  if (!(sigma_x > 0.0)) fail("sigma_x must be positive");
  if (!(sigma_r > 0.0)) fail("sigma_r must be positive");
  if (!(s0 > s_m && s0 < S_m)) fail("s0 must lie strictly between s_m and S_m");
  if (!(dt > 0.0)) fail("dt must be positive");
}

namespace {
// key order below is the serialization order
const char *const kConfigKeys[] = {"L",       "S_m",     "S_M",         "sigma_S",
                                   "gamma_m", "gamma_M", "sigma_gamma", "s0",
                                   "s_m",     "R_M",     "sigma_x",     "sigma_r",
                                   "dt",      "seed"};
}  // namespace

ModelConfig ModelConfig::from_json_text(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char *key : kConfigKeys) known = known || it.key() == key;
    if (!known) throw ConfigError("unknown config key: " + it.key());
  }
  for (const char *key : kConfigKeys)
    if (!j.contains(key)) throw ConfigError(std::string("missing required config key: ") + key);

  ModelConfig cfg;
  auto num = [&](const char *key) {
    if (!j.at(key).is_number()) throw ConfigError(std::string("config key ") + key + " must be a number");
    return j.at(key).get<double>();
  };
  cfg.L = num("L");
  cfg.S_m = num("S_m");
  cfg.S_M = num("S_M");
  cfg.sigma_S = num("sigma_S");
  cfg.gamma_m = num("gamma_m");
  cfg.gamma_M = num("gamma_M");
  cfg.sigma_gamma = num("sigma_gamma");
  cfg.s0 = num("s0");
  cfg.s_m = num("s_m");
  cfg.R_M = num("R_M");
  cfg.sigma_x = num("sigma_x");
  cfg.sigma_r = num("sigma_r");
  cfg.dt = num("dt");
  if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
    throw ConfigError("config key seed must be an integer");
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

std::string ModelConfig::to_json_text() const {
  nlohmann::ordered_json j;
  j["L"] = L;
  j["S_m"] = S_m;
  j["S_M"] = S_M;
  j["sigma_S"] = sigma_S;
  j["gamma_m"] = gamma_m;
  j["gamma_M"] = gamma_M;
  j["sigma_gamma"] = sigma_gamma;
  j["s0"] = s0;
  j["s_m"] = s_m;
  j["R_M"] = R_M;
  j["sigma_x"] = sigma_x;
  j["sigma_r"] = sigma_r;
  j["dt"] = dt;
  j["seed"] = seed;
  return j.dump(2);
}

ModelConfig default_config() {
  ModelConfig cfg;  // field initializers carry the reference values
  cfg.R_M = std::log(cfg.S_M / cfg.s_m);  // log 20
  cfg.sigma_r = std::log(2.0);
  return cfg;
}

}  // namespace meanfield
