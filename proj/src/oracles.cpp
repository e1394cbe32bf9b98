#include "mfucrl/oracles.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "mfucrl/error.hpp"
#include "mfucrl/seeds.hpp"

namespace mfucrl {

PolicyFn random_lipschitz_policy(std::uint64_t seed, double a_min, double a_max) {
  auto u = [seed](std::uint64_t k, double lo, double hi) { return lo + (hi - lo) * key_uniform(derive_seed(seed, {k})); };
  const double c = u(0, -2.0, 2.0);
  const double b1 = u(1, -2.0, 2.0), b2 = u(2, -1.0, 1.0);
  const double p1 = u(3, 0.0, 1.0), p2 = u(4, 0.0, 1.0);
  const double g = u(5, -0.5, 0.5);
  auto raw = [=](double s, const GridDistribution& mu) {
    constexpr double tau = 2.0 * std::numbers::pi;
    return c + b1 * std::sin(tau * (s + p1)) + b2 * std::sin(2.0 * tau * (s + p2)) + g * (mu.density_at(s) - 1.0);
  };
  return clamped(raw, a_min, a_max);
}

GridDistribution random_start(std::uint64_t seed, int bins) {
  const double mean = key_uniform(derive_seed(seed, {0}));
  const double sd = 0.05 + 0.25 * key_uniform(derive_seed(seed, {1}));
  char spec[64];
  std::snprintf(spec, sizeof spec, "gaussian(%.17g,%.17g)", mean, sd);
  return make_initial(spec, bins);
}

ParticleCheck particle_check(const GridDistribution& mu0, std::span<const PolicyFn> profile, const DriftFn& drift,
                             std::size_t particles, std::uint64_t seed, const FlowOptions& options) {
  const auto flow = flow_rollout(mu0, profile, drift, options);
  const auto emp = particle_rollout(mu0, profile, drift, particles, seed);
  ParticleCheck out;
  for (std::size_t h = 0; h < flow.size(); ++h) {
    out.w1.push_back(wasserstein1_circle(flow[h], emp[h]));
    out.max_w1 = std::max(out.max_w1, out.w1.back());
  }
  return out;
}

MonteCarloEstimate monte_carlo_objective(const GridDistribution& mu0, std::span<const PolicyFn> profile,
                                         const DriftFn& drift, std::size_t particles, std::uint64_t seed,
                                         const FlowOptions& options) {
  if (particles < 2) throw DynamicsError("Monte Carlo needs at least two particles");
  const auto flow = flow_rollout(mu0, profile, drift, options);
  std::vector<double> pos = mu0.sample(particles, derive_seed(seed, {0}));
  std::vector<double> ret(particles, 0.0);
  for (std::size_t h = 0; h < profile.size(); ++h) {
    const GridDistribution& mu = flow[h];
    for (std::size_t k = 0; k < particles; ++k) {
      const double s = pos[k];
      const double a = profile[h](s, mu);
      ret[k] += reward(s, a, mu);
      pos[k] = wrap(drift.mean(s, a, mu) + drift.noise_std * key_normal(derive_seed(seed, {1, k, h})));
    }
  }
  double mean = 0.0;
  for (double r : ret) mean += r;
  mean /= static_cast<double>(particles);
  double ss = 0.0;
  for (double r : ret) ss += (r - mean) * (r - mean);
  const double var = ss / static_cast<double>(particles - 1);
  return {mean, std::sqrt(var / static_cast<double>(particles))};
}

bool ValidationReport::pass() const {
  for (const auto& r : flow)
    if (!r.pass) return false;
  for (const auto& r : reward)
    if (!r.pass) return false;
  return true;
}

ValidationReport run_validation(const RunConfig& config, std::uint64_t seed) {
  const SwarmConfig env = config.swarm();
  const DriftFn drift = make_drift(env);
  const GridDistribution mu0 = make_initial(config.env.initial, env.bins);
  const auto& chk = config.check;
  FlowOptions options;
  options.periodic = chk.periodic;
  auto sub = [seed](std::uint64_t a, int b) {
    return derive_seed(seed, {stream::kValidate, a, static_cast<std::uint64_t>(b)});
  };

  ValidationReport report;
  for (int p = 0; p < chk.policies; ++p) {
    const std::vector<PolicyFn> profile(static_cast<std::size_t>(chk.steps),
                                        random_lipschitz_policy(sub(0, p), env.a_min, env.a_max));
    const ParticleCheck c = particle_check(mu0, profile, drift, chk.particles, sub(1, p), options);
    report.flow.push_back({p, c.w1, c.max_w1, c.max_w1 <= chk.w1_tol});
  }
  for (int q = 0; q < chk.pairs; ++q) {
    const std::vector<PolicyFn> profile(static_cast<std::size_t>(env.horizon),
                                        random_lipschitz_policy(sub(2, q), env.a_min, env.a_max));
    const GridDistribution start = random_start(sub(3, q), env.bins);
    const auto traj = flow_rollout(start, profile, drift, options);
    double j = 0.0;
    for (std::size_t h = 0; h < profile.size(); ++h) j += integrated_reward(traj[h], profile[h]);
    const MonteCarloEstimate mc = monte_carlo_objective(start, profile, drift, chk.mc_particles, sub(4, q), options);
    report.reward.push_back({q, j, mc.mean, mc.std_error, std::abs(j - mc.mean) <= chk.stderr_mult * mc.std_error});
  }
  return report;
}

}  // namespace mfucrl
