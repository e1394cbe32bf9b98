#pragma once

#include <cstdint>
#include <vector>

#include "mfucrl/config.hpp"
#include "mfucrl/flow.hpp"
#include "mfucrl/swarm.hpp"

namespace mfucrl {

/// Smooth random policy c + sum_k b_k sin(2 pi k s + p_k) + g (mu(s) - 1),
/// clamped to [a_min, a_max]. Lipschitz in s and in the density.
PolicyFn random_lipschitz_policy(std::uint64_t seed, double a_min, double a_max);

/// Wrapped normal start with random mean in [0, 1) and std in [0.05, 0.3].
GridDistribution random_start(std::uint64_t seed, int bins);

struct ParticleCheck {
  std::vector<double> w1;  // W1(flow_h, empirical_h), h = 0..steps
  double max_w1 = 0.0;
};

/// Flow against a finite particle simulation of the same dynamics.
ParticleCheck particle_check(const GridDistribution& mu0, std::span<const PolicyFn> profile, const DriftFn& drift,
                             std::size_t particles, std::uint64_t seed, const FlowOptions& options = {});

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Episode return averaged over independent agents that start from mu0 and
/// move in the mean-field flow mu_h: agent k collects
/// sum_h r(s_h, pi_h(s_h, mu_h), mu_h).
MonteCarloEstimate monte_carlo_objective(const GridDistribution& mu0, std::span<const PolicyFn> profile,
                                         const DriftFn& drift, std::size_t particles, std::uint64_t seed,
                                         const FlowOptions& options = {});

struct ValidationReport {
  struct FlowRow {
    int policy = 0;
    std::vector<double> w1;
    double max_w1 = 0.0;
    bool pass = false;
  };
  struct RewardRow {
    int pair = 0;
    double j_flow = 0.0;
    double j_mc = 0.0;
    double std_error = 0.0;
    bool pass = false;
  };
  std::vector<FlowRow> flow;
  std::vector<RewardRow> reward;
  bool pass() const;
};

/// Both oracle checks on the configured environment: `check.policies` random
/// policies through `check.steps` flow steps against `check.particles`
/// particles, and `check.pairs` random policy/start pairs over the full
/// horizon against `check.mc_particles` Monte-Carlo agents.
ValidationReport run_validation(const RunConfig& config, std::uint64_t seed);

}  // namespace mfucrl
