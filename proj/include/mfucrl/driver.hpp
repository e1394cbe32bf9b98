#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfucrl/config.hpp"
#include "mfucrl/gp.hpp"
#include "mfucrl/planner.hpp"

namespace mfucrl {

/// One observed transition ((s, a, mu features), s').
struct EnvTransition {
  double s = 0.0;
  double a = 0.0;
  std::vector<double> mu_feat;
  double s_next = 0.0;
};

/// Rolls K representative agents alongside a flow trajectory: s_0 ~ mu_0,
/// actions from `policy` given the flow's mu_h, true noisy transitions.
/// Returns K * H transitions, agent by agent.
std::vector<EnvTransition> collect_transitions(std::span<const GridDistribution> flow, const PolicyFn& policy,
                                               const DriftFn& truth, int agents, const FeatureMode& features,
                                               std::uint64_t seed);

struct EpisodeRecord {
  int t = 0;
  double j_real = 0.0;
  double j_predicted = 0.0;
  double j_star = 0.0;
  double regret = 0.0;
  /// Mean over agents of sum_h sigma^2(z_h) under the model used for planning.
  double sigma_sum = 0.0;
  std::size_t n_data = 0;
  double beta = 0.0;
  long wall_time_ms = 0;
  /// sum_h W1(hallucinated mu_h, true mu_h) under the executed policy.
  double w1_sum = 0.0;
  std::vector<double> policy;
  std::vector<double> eta;
};

struct BenchmarkRecord {
  double j_star = 0.0;
  std::vector<double> policy;
  long evals = 0;
};

struct RunManifest {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  RunConfig config;
  std::uint64_t seed = 0;
  std::string status = "complete";
  std::string error;
  BenchmarkRecord benchmark;
  /// Objective of the continuous-time analytic policy on the same setup.
  double j_analytic = 0.0;
  std::vector<EpisodeRecord> episodes;
  std::string model_checkpoint;
};

/// Mutable state of one run.
struct RunState {
  RunConfig config;
  SwarmConfig env;
  DriftFn truth;
  GridDistribution mu0;
  GpPosterior model;
  Eigen::MatrixXd inputs;
  Eigen::VectorXd targets;
  RunManifest manifest;
  std::vector<double> last_solution;
  GridTrace last_flow;
  std::optional<double> beta_override;

  RunState(RunConfig cfg, std::uint64_t seed);
};

/// Computes the Known-Dynamics benchmark and stores it in the manifest.
void run_benchmark(RunState& state);

/// One episode: plan under the current model, execute on the true flow,
/// collect K * H transitions, refit and record.
EpisodeRecord run_episode(RunState& state, int t);

/// Benchmark followed by T episodes. Writes the run directory when
/// `config.out_dir` is set; on failure a partial manifest is written before
/// the exception propagates.
using EpisodeCallback = std::function<void(const EpisodeRecord&)>;
RunManifest run_experiment(const RunConfig& config, std::uint64_t seed, const EpisodeCallback& on_episode = {});

struct RegretSummary {
  double cumulative = 0.0;
  std::vector<double> per_episode;
  int window = 0;
  double first_mean = 0.0;
  double last_mean = 0.0;
  /// Fraction of episodes with J_predicted >= J_real.
  double optimism_fraction = 0.0;
  bool optimism_warning = false;
};

/// Requires at least two episodes; window = min(5, T / 2).
RegretSummary regret_summary(const RunManifest& manifest);

/// Rebuilds the network policy stored for an episode (or the benchmark when
/// `episode` is 0).
NetworkPolicy stored_policy(const RunManifest& manifest, int episode);

}  // namespace mfucrl
