#include "mfucrl/driver.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "mfucrl/error.hpp"
#include "mfucrl/run_io.hpp"
#include "mfucrl/seeds.hpp"

namespace mfucrl {

std::vector<EnvTransition> collect_transitions(std::span<const GridDistribution> flow, const PolicyFn& policy,
                                               const DriftFn& truth, int agents, const FeatureMode& features,
                                               std::uint64_t seed) {
  if (flow.size() < 2) throw DynamicsError("flow trajectory needs at least two distributions");
  if (agents < 1) throw ConfigError("loop.K", "must be at least 1");
  const std::size_t horizon = flow.size() - 1;
  const std::vector<double> starts = flow.front().sample(static_cast<std::size_t>(agents), derive_seed(seed, {0}));
  std::vector<EnvTransition> out;
  out.reserve(static_cast<std::size_t>(agents) * horizon);
  for (std::size_t k = 0; k < starts.size(); ++k) {
    double s = starts[k];
    for (std::size_t h = 0; h < horizon; ++h) {
      const GridDistribution& mu = flow[h];
      const double a = policy(s, mu);
      const double next = wrap(truth.mean(s, a, mu) + truth.noise_std * key_normal(derive_seed(seed, {1, k, h})));
      out.push_back({s, a, distribution_features(mu, s, features), next});
      s = next;
    }
  }
  return out;
}

RunState::RunState(RunConfig cfg, std::uint64_t seed)
    : config(std::move(cfg)),
      env(config.swarm()),
      truth(make_drift(env)),
      mu0(make_initial(config.env.initial, config.env.bins)),
      model(GpPosterior::prior(config.model.kernel, config.noise_var(), config.model_dim())),
      inputs(0, static_cast<Eigen::Index>(config.model_dim())),
      targets(0) {
  config.validate();
  manifest.config = config;
  manifest.seed = seed;
  manifest.config.seed = seed;
}

void run_benchmark(RunState& state) {
  const PlanResult bench = plan_known_dynamics(state.truth, state.mu0, state.env, state.config.planner,
                                               derive_seed(state.manifest.seed, {stream::kBenchmark}));
  state.manifest.benchmark = {bench.predicted_j, bench.policy, bench.evals};

  const double lo = state.env.a_min, hi = state.env.a_max;
  const std::vector<PolicyFn> analytic(static_cast<std::size_t>(state.env.horizon),
                                       clamped([](double s, const GridDistribution&) { return analytic_policy(s); }, lo, hi));
  state.manifest.j_analytic = episode_objective(state.mu0, analytic, state.truth);
}

EpisodeRecord run_episode(RunState& state, int t) {
  if (t < 1) throw Error("episode index must be at least 1");
  const auto start = std::chrono::steady_clock::now();
  const RunConfig& cfg = state.config;
  const std::uint64_t seed = state.manifest.seed;

  const double b = state.beta_override ? *state.beta_override : beta(state.model, cfg.model.beta);
  const HallucinatedModel model{&state.model, b, cfg.model.features};
  PlanOptions options;
  if (cfg.planner.warm_start) options.init_mean = state.last_solution;
  const PlanResult planned =
      plan(model, state.mu0, state.env, cfg.planner, derive_seed(seed, {stream::kPlan, static_cast<std::uint64_t>(t)}),
           options);

  const NetworkPolicy policy = make_policy(state.env, cfg.planner, planned.policy);
  const EtaNetwork eta = make_eta(cfg.planner, planned.eta);
  GridTrace real, imagined;
  const double j_real = known_objective(state.truth, policy, state.mu0, state.env, &real);
  hallucinated_objective(model, policy, eta, state.mu0, state.env, &imagined);
  double w1 = 0.0;
  for (std::size_t h = 1; h < real.flow.size(); ++h) w1 += wasserstein1_circle(imagined.flow[h], real.flow[h]);

  const auto data = collect_transitions(real.flow, policy.as_policy_fn(), state.truth, cfg.loop.particles,
                                        cfg.model.features,
                                        derive_seed(seed, {stream::kCollect, static_cast<std::uint64_t>(t)}));

  const auto old_rows = state.inputs.rows();
  const auto n_new = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd fresh(n_new, state.inputs.cols());
  Eigen::VectorXd fresh_y(n_new);
  for (Eigen::Index r = 0; r < n_new; ++r) {
    const auto& tr = data[static_cast<std::size_t>(r)];
    const double angle = 2.0 * std::numbers::pi * tr.s;
    fresh(r, 0) = std::cos(angle);
    fresh(r, 1) = std::sin(angle);
    fresh(r, 2) = tr.a;
    for (std::size_t f = 0; f < tr.mu_feat.size(); ++f) fresh(r, 3 + static_cast<Eigen::Index>(f)) = tr.mu_feat[f];
    fresh_y(r) = wrap_signed(tr.s_next - tr.s);
  }

  Eigen::VectorXd mean, sd;
  state.model.predict_batch(fresh, mean, sd);
  const double sigma_sum = sd.squaredNorm() / cfg.loop.particles;

  state.inputs.conservativeResize(old_rows + n_new, Eigen::NoChange);
  state.inputs.bottomRows(n_new) = fresh;
  state.targets.conservativeResize(old_rows + n_new);
  state.targets.tail(n_new) = fresh_y;
  state.model = fit(cfg.model.kernel, state.inputs, state.targets, cfg.noise_var(), cfg.model.subset_cap,
                    cfg.model.approx);

  EpisodeRecord rec;
  rec.t = t;
  rec.j_real = j_real;
  rec.j_predicted = planned.predicted_j;
  rec.j_star = state.manifest.benchmark.j_star;
  rec.regret = rec.j_star - rec.j_real;
  rec.sigma_sum = sigma_sum;
  rec.n_data = static_cast<std::size_t>(state.inputs.rows());
  rec.beta = b;
  rec.w1_sum = w1;
  rec.policy = planned.policy;
  rec.eta = planned.eta;
  rec.wall_time_ms = static_cast<long>(
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count());

  state.last_solution = planned.policy;
  state.last_solution.insert(state.last_solution.end(), planned.eta.begin(), planned.eta.end());
  state.last_flow = std::move(real);
  state.manifest.episodes.push_back(rec);
  return rec;
}

namespace {

void write_outputs(const RunState& state) {
  const std::string& dir = state.config.out_dir;
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  RunManifest manifest = state.manifest;
  manifest.model_checkpoint = "model_final.json";
  write_json_file((root / "manifest.json").string(), to_json(manifest));
  {
    std::ofstream csv(root / "episodes.csv");
    write_episodes_csv(csv, manifest);
  }
  write_json_file((root / "model_final.json").string(), checkpoint_json(state.model, state.config.model.beta));

  const int last = static_cast<int>(manifest.episodes.size());
  const NetworkPolicy policy = stored_policy(manifest, last);
  nlohmann::json pj;
  pj["episode"] = last;
  pj["policy"] = std::vector<double>(policy.params().begin(), policy.params().end());
  pj["eta"] = last > 0 ? manifest.episodes.back().eta : std::vector<double>{};
  pj["hidden_width"] = state.config.planner.hidden_width;
  pj["feat_mode"] = state.config.planner.features.to_string();
  pj["a_min"] = state.env.a_min;
  pj["a_max"] = state.env.a_max;
  write_json_file((root / "policy_final.json").string(), pj);

  GridTrace trace;
  known_objective(state.truth, policy, state.mu0, state.env, &trace);
  std::ofstream flow(root / "flow_final.csv");
  write_trajectory_csv(flow, trace.flow);
}

}  // namespace

RunManifest run_experiment(const RunConfig& config, std::uint64_t seed, const EpisodeCallback& on_episode) {
  RunState state(config, seed);
  try {
    run_benchmark(state);
    for (int t = 1; t <= config.loop.episodes; ++t) {
      const EpisodeRecord rec = run_episode(state, t);
      if (on_episode) on_episode(rec);
    }
  } catch (const std::exception& e) {
    state.manifest.status = "failed";
    state.manifest.error = e.what();
    if (!config.out_dir.empty()) {
      std::filesystem::create_directories(config.out_dir);
      write_json_file((std::filesystem::path(config.out_dir) / "manifest.json").string(), to_json(state.manifest));
    }
    throw;
  }
  write_outputs(state);
  return state.manifest;
}

RegretSummary regret_summary(const RunManifest& manifest) {
  const auto& eps = manifest.episodes;
  if (eps.size() < 2) throw Error("regret summary needs at least two episodes");
  RegretSummary s;
  int optimistic = 0;
  for (const auto& e : eps) {
    s.per_episode.push_back(e.regret);
    s.cumulative += e.regret;
    if (e.j_predicted >= e.j_real) ++optimistic;
  }
  const int n = static_cast<int>(eps.size());
  s.window = std::min(5, n / 2);
  for (int i = 0; i < s.window; ++i) {
    s.first_mean += s.per_episode[static_cast<std::size_t>(i)] / s.window;
    s.last_mean += s.per_episode[static_cast<std::size_t>(n - s.window + i)] / s.window;
  }
  s.optimism_fraction = static_cast<double>(optimistic) / n;
  s.optimism_warning = s.optimism_fraction < 0.5;
  return s;
}

NetworkPolicy stored_policy(const RunManifest& manifest, int episode) {
  const SwarmConfig env = manifest.config.swarm();
  if (episode == 0) return make_policy(env, manifest.config.planner, manifest.benchmark.policy);
  if (episode < 0 || episode > static_cast<int>(manifest.episodes.size()))
    throw Error("no stored policy for episode " + std::to_string(episode));
  return make_policy(env, manifest.config.planner, manifest.episodes[static_cast<std::size_t>(episode - 1)].policy);
}

}  // namespace mfucrl
