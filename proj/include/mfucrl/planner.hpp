#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "mfucrl/cem.hpp"
#include "mfucrl/flow.hpp"
#include "mfucrl/gp.hpp"
#include "mfucrl/policy_net.hpp"
#include "mfucrl/swarm.hpp"

namespace mfucrl {

struct OptimizerConfig {
  CemConfig cem;
  int hidden_width = 16;
  FeatureMode features;
  /// Start each episode's search from the previous episode's solution.
  bool warm_start = true;
  /// Run an eta-frozen search first and inject its incumbent into the free
  /// search, which makes the optimistic value dominate the frozen one.
  bool optimism_guard = false;

  void validate() const;

  bool operator==(const OptimizerConfig&) const = default;
};

/// Learned dynamics as seen by the planner: the posterior over displacements,
/// its confidence scale and the feature encoding of its inputs.
struct HallucinatedModel {
  const GpPosterior* gp = nullptr;
  double beta = 2.0;
  FeatureMode model_features;
};

/// s + mean(z) + beta std(z) eta(z) for z = (s, a, mu).
double hallucinated_drift(const HallucinatedModel& model, const NetworkPolicy& policy, const EtaNetwork& eta,
                          double s, double a, const GridDistribution& mu);

/// Per-step quantities of a grid rollout.
struct GridTrace {
  std::vector<GridDistribution> flow;       // H + 1 entries
  std::vector<Eigen::VectorXd> actions;     // H entries, one action per grid node
  std::vector<Eigen::VectorXd> eta;         // hallucinated rollouts only
  std::vector<double> step_rewards;         // integrated reward per step
};

/// Grid-node drifts for step h given mu_h, the policy inputs and the actions.
using GridDriftFn = std::function<Eigen::VectorXd(const GridDistribution& mu, const Eigen::MatrixXd& policy_features,
                                                  const Eigen::VectorXd& actions, GridTrace* trace)>;

/// Sum over h < H of the integrated reward along the grid flow driven by the
/// policy and `drift`. Fills `trace` when given.
double rollout_objective(const GridDistribution& mu0, const SwarmConfig& env, const NetworkPolicy& policy,
                         const GridDriftFn& drift, GridTrace* trace = nullptr);

/// Objective under the true dynamics.
double known_objective(const DriftFn& truth, const NetworkPolicy& policy, const GridDistribution& mu0,
                       const SwarmConfig& env, GridTrace* trace = nullptr);

/// Objective under the hallucinated dynamics.
double hallucinated_objective(const HallucinatedModel& model, const NetworkPolicy& policy, const EtaNetwork& eta,
                              const GridDistribution& mu0, const SwarmConfig& env, GridTrace* trace = nullptr);

struct PlanResult {
  std::vector<double> policy;
  std::vector<double> eta;
  double predicted_j = 0.0;
  long evals = 0;
  std::vector<double> history;
};

struct PlanOptions {
  bool freeze_eta = false;
  /// Initial CEM mean, policy block followed by eta block when eta is free.
  std::vector<double> init_mean;
  std::vector<std::vector<double>> injected;
};

NetworkPolicy make_policy(const SwarmConfig& env, const OptimizerConfig& opt, std::vector<double> params = {});
EtaNetwork make_eta(const OptimizerConfig& opt, std::vector<double> params = {});

/// Joint optimistic search over (policy, eta).
PlanResult plan(const HallucinatedModel& model, const GridDistribution& mu0, const SwarmConfig& env,
                const OptimizerConfig& opt, std::uint64_t seed, const PlanOptions& options = {});

/// Same search with the true drift in place of the model; eta stays zero.
PlanResult plan_known_dynamics(const DriftFn& truth, const GridDistribution& mu0, const SwarmConfig& env,
                               const OptimizerConfig& opt, std::uint64_t seed, const PlanOptions& options = {});

}  // namespace mfucrl
