#include "mfucrl/swarm.hpp"

#include <cmath>
#include <numbers>
#include <regex>

#include "mfucrl/error.hpp"

namespace mfucrl {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

std::string to_string(DynamicsVariant v) { return v == DynamicsVariant::Basic ? "basic" : "congestion"; }

DynamicsVariant parse_dynamics(const std::string& name) {
  if (name == "basic") return DynamicsVariant::Basic;
  if (name == "congestion") return DynamicsVariant::Congestion;
  throw ConfigError("env.dynamics", "expected \"basic\" or \"congestion\", got \"" + name + "\"");
}

void SwarmConfig::validate() const {
  if (bins < 2) throw ConfigError("env.M", "must be at least 2");
  if (horizon < 1) throw ConfigError("env.H", "must be at least 1");
  if (!(dt > 0.0)) throw ConfigError("env.dt", "must be positive");
  if (!(a_min < a_max)) throw ConfigError("env.a_min", "a_min must be below a_max");
  if (!(noise_std > 0.0)) throw ConfigError("env.noise_std", "must be positive");
}

double swarm_dynamics(const SwarmConfig& cfg, double s, double a, const GridDistribution& mu) {
  if (cfg.dynamics == DynamicsVariant::Basic) return s + a * cfg.dt;
  return s + a * (4.0 - 4.0 * mu.density_at(s)) * cfg.dt;
}

DriftFn make_drift(const SwarmConfig& cfg) {
  return DriftFn{[cfg](double s, double a, const GridDistribution& mu) { return swarm_dynamics(cfg, s, a, mu); },
                 cfg.noise_std};
}

double location_reward(double s) {
  const double sn = std::sin(kTwoPi * s);
  const double cs = std::cos(kTwoPi * s);
  return -2.0 * std::numbers::pi * std::numbers::pi * (-sn + cs * cs) + 2.0 * sn;
}

double reward_at_density(double s, double a, double density) {
  return location_reward(s) - 0.5 * std::abs(a) - std::log(std::max(density, kDensityFloor));
}

double reward(double s, double a, const GridDistribution& mu) { return reward_at_density(s, a, mu.density_at(s)); }

double integrated_reward(const GridDistribution& mu, std::span<const double> actions) {
  const int m = mu.size();
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    const double h = mu.height(i);
    if (h == 0.0) continue;
    total += h * reward_at_density(mu.grid_point(i), actions[static_cast<std::size_t>(i)], h);
  }
  return total / m;
}

double integrated_reward(const GridDistribution& mu, const PolicyFn& policy) {
  std::vector<double> actions(static_cast<std::size_t>(mu.size()));
  for (int i = 0; i < mu.size(); ++i) actions[static_cast<std::size_t>(i)] = policy(mu.grid_point(i), mu);
  return integrated_reward(mu, actions);
}

double episode_objective(const GridDistribution& mu0, std::span<const PolicyFn> profile, const DriftFn& drift) {
  const auto traj = flow_rollout(mu0, profile, drift);
  double total = 0.0;
  for (std::size_t h = 0; h < profile.size(); ++h) total += integrated_reward(traj[h], profile[h]);
  return total;
}

double analytic_policy(double s) { return kTwoPi * std::cos(kTwoPi * s); }

double analytic_density_unnormalized(double s) { return std::exp(2.0 * std::sin(kTwoPi * s)); }

AnalyticSolution analytic_solution(int bins) {
  return AnalyticSolution{[](double s, const GridDistribution&) { return analytic_policy(s); },
                          GridDistribution::from_density(bins, analytic_density_unnormalized)};
}

GridDistribution make_initial(const std::string& spec, int bins) {
  if (spec == "ergodic") return GridDistribution::from_density(bins, analytic_density_unnormalized);
  if (spec == "uniform") return GridDistribution::uniform(bins);
  static const std::regex gaussian(R"(gaussian\(\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*\))");
  std::smatch match;
  if (std::regex_match(spec, match, gaussian)) {
    const double mean = std::stod(match[1].str());
    const double sd = std::stod(match[2].str());
    if (!(sd > 0.0)) throw ConfigError("env.initial", "gaussian std must be positive");
    return GridDistribution::from_density(bins, [mean, sd](double s) {
      double total = 0.0;
      for (int k = -4; k <= 4; ++k) {
        const double z = (s + k - mean) / sd;
        total += std::exp(-0.5 * z * z);
      }
      return total;
    });
  }
  throw ConfigError("env.initial", "expected ergodic, uniform or gaussian(mean,std), got \"" + spec + "\"");
}

}  // namespace mfucrl
