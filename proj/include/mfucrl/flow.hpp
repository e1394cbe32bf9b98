#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mfucrl/torus.hpp"

namespace mfucrl {

/// Next-state mean (before noise and wrapping) of the representative agent.
struct DriftFn {
  std::function<double(double s, double a, const GridDistribution& mu)> mean;
  /// Standard deviation of the additive Gaussian transition noise.
  double noise_std = 0.1;
};

/// Action of the representative agent at state s under population mu.
using PolicyFn = std::function<double(double s, const GridDistribution& mu)>;

/// Wraps a policy so its output is clamped to [lo, hi].
PolicyFn clamped(PolicyFn policy, double lo, double hi);

/// Constant-action policy.
PolicyFn constant_policy(double action);

struct FlowOptions {
  bool renormalize = true;
  /// Test hook: when false, mass leaving [0, 1) is dropped instead of wrapped.
  bool periodic = true;
};

/// Pushes `mu` through Gaussian transitions centred at `drifts[j]` (one drift
/// per grid point), summing the three periodic images of each kernel.
/// Throws DynamicsError on a non-finite drift.
GridDistribution propagate(const GridDistribution& mu, std::span<const double> drifts, double noise_std,
                           const FlowOptions& options = {});

/// One step of the mean-field flow.
GridDistribution flow_step(const GridDistribution& mu, const PolicyFn& policy, const DriftFn& drift,
                           const FlowOptions& options = {});

/// [mu0, mu1, ..., muH] with mu_{h+1} = flow_step(mu_h, profile[h]).
std::vector<GridDistribution> flow_rollout(const GridDistribution& mu0, std::span<const PolicyFn> profile,
                                           const DriftFn& drift, const FlowOptions& options = {});

/// Finite-population simulation of the same flow: `particles` agents start
/// from mu0 and move with noisy dynamics, with policy and drift reading the
/// empirical histogram. Returns the H+1 empirical histograms.
std::vector<GridDistribution> particle_rollout(const GridDistribution& mu0, std::span<const PolicyFn> profile,
                                               const DriftFn& drift, std::size_t particles, std::uint64_t seed);

/// Writes a trajectory as CSV rows `h,m_1,...,m_M` with a header line.
void write_trajectory_csv(std::ostream& out, std::span<const GridDistribution> trajectory);

}  // namespace mfucrl
