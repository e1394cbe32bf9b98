#pragma once

#include <span>
#include <string>
#include <vector>

#include "mfucrl/flow.hpp"
#include "mfucrl/torus.hpp"

namespace mfucrl {

enum class DynamicsVariant { Basic, Congestion };

std::string to_string(DynamicsVariant v);
DynamicsVariant parse_dynamics(const std::string& name);

/// Swarm-motion environment constants.
struct SwarmConfig {
  int bins = 100;
  int horizon = 50;
  double dt = 1.0 / 50.0;
  double a_min = -7.0;
  double a_max = 7.0;
  DynamicsVariant dynamics = DynamicsVariant::Basic;
  double noise_std = 0.1414213562373095;  // sqrt(dt)

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;

  bool operator==(const SwarmConfig&) const = default;
};

/// Densities are floored at this value before taking logarithms.
inline constexpr double kDensityFloor = 1e-8;

/// Pre-noise, pre-wrap next state.
///   Basic:      s + a dt
///   Congestion: s + a (4 - 4 mu(s)) dt
double swarm_dynamics(const SwarmConfig& cfg, double s, double a, const GridDistribution& mu);

DriftFn make_drift(const SwarmConfig& cfg);

/// Location reward phi(s) = -2 pi^2 (-sin 2 pi s + cos^2 2 pi s) + 2 sin 2 pi s.
double location_reward(double s);

/// r(s, a, mu) = phi(s) - |a| / 2 - ln mu(s), with mu(s) already evaluated.
double reward_at_density(double s, double a, double density);

/// r(s, a, mu) with mu(s) from periodic interpolation.
double reward(double s, double a, const GridDistribution& mu);

/// Grid quadrature of the reward over mu with actions a_j at each grid point.
double integrated_reward(const GridDistribution& mu, std::span<const double> actions);

/// Grid quadrature of r(s, pi(s, mu), mu) over mu.
double integrated_reward(const GridDistribution& mu, const PolicyFn& policy);

/// Sum of integrated rewards along the flow rollout of the profile.
double episode_objective(const GridDistribution& mu0, std::span<const PolicyFn> profile, const DriftFn& drift);

/// Continuous-time ergodic optimum: pi(s) = 2 pi cos 2 pi s and
/// mu(s) proportional to exp(2 sin 2 pi s).
double analytic_policy(double s);
double analytic_density_unnormalized(double s);

struct AnalyticSolution {
  PolicyFn policy;
  GridDistribution distribution;
};

AnalyticSolution analytic_solution(int bins);

/// Initial population distributions: "ergodic", "uniform" or
/// "gaussian(mean,std)" (wrapped normal).
GridDistribution make_initial(const std::string& spec, int bins);

}  // namespace mfucrl
