#include "mfucrl/planner.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mfucrl/error.hpp"

namespace mfucrl {

void OptimizerConfig::validate() const {
  cem.validate();
  if (hidden_width < 1) throw ConfigError("planner.hidden_width", "must be at least 1");
}

namespace {

Eigen::MatrixXd model_queries(const GridDistribution& mu, const Eigen::MatrixXd& policy_features,
                              const Eigen::VectorXd& actions, const FeatureMode& model_features) {
  const int m = mu.size();
  Eigen::MatrixXd q(m, 3 + model_features.width());
  q.col(0) = policy_features.col(0);
  q.col(1) = policy_features.col(1);
  q.col(2) = actions;
  if (model_features.kind == FeatureMode::Kind::Local) {
    for (int i = 0; i < m; ++i) q(i, 3) = mu.height(i);
  } else if (model_features.kind == FeatureMode::Kind::Global) {
    const auto pooled = distribution_features(mu, 0.0, model_features);
    for (std::size_t f = 0; f < pooled.size(); ++f) q.col(3 + static_cast<Eigen::Index>(f)).setConstant(pooled[f]);
  }
  return q;
}

// A rollout that produces a non-finite drift scores NaN, which the search discards.
template <class F>
CemObjective discarding_failures(F f) {
  return [f = std::move(f)](std::span<const double> x) {
    try {
      return f(x);
    } catch (const DynamicsError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
}

Eigen::VectorXd grid_points(int m) {
  Eigen::VectorXd s(m);
  for (int i = 0; i < m; ++i) s(i) = static_cast<double>(i) / m;
  return s;
}

}  // namespace

double hallucinated_drift(const HallucinatedModel& model, const NetworkPolicy& policy, const EtaNetwork& eta,
                          double s, double a, const GridDistribution& mu) {
  const JointInput z = make_joint_input(s, a, mu, model.model_features);
  const GpPrediction pred = model.gp->predict(z);
  Eigen::VectorXd act(1);
  act(0) = a;
  const double e = eta.values(point_policy_features(s, mu, policy.features()), policy.normalized(act))(0);
  return s + pred.mean + model.beta * pred.std * e;
}

double rollout_objective(const GridDistribution& mu0, const SwarmConfig& env, const NetworkPolicy& policy,
                         const GridDriftFn& drift, GridTrace* trace) {
  if (env.horizon < 1) throw ConfigError("env.H", "must be at least 1");
  GridDistribution mu = mu0;
  if (trace) {
    *trace = GridTrace{};
    trace->flow.push_back(mu);
  }
  double total = 0.0;
  for (int h = 0; h < env.horizon; ++h) {
    const Eigen::MatrixXd features = grid_policy_features(mu, policy.features());
    const Eigen::VectorXd actions = policy.actions(features);
    if (actions.minCoeff() < env.a_min || actions.maxCoeff() > env.a_max)
      throw PlanningError("policy emitted an action outside the action interval");
    const double r = integrated_reward(mu, std::span<const double>(actions.data(), static_cast<std::size_t>(actions.size())));
    total += r;
    const Eigen::VectorXd drifts = drift(mu, features, actions, trace);
    if (trace) {
      trace->actions.push_back(actions);
      trace->step_rewards.push_back(r);
    }
    mu = propagate(mu, std::span<const double>(drifts.data(), static_cast<std::size_t>(drifts.size())), env.noise_std);
    if (trace) trace->flow.push_back(mu);
  }
  return total;
}

double known_objective(const DriftFn& truth, const NetworkPolicy& policy, const GridDistribution& mu0,
                       const SwarmConfig& env, GridTrace* trace) {
  const Eigen::VectorXd s = grid_points(mu0.size());
  return rollout_objective(
      mu0, env, policy,
      [&](const GridDistribution& mu, const Eigen::MatrixXd&, const Eigen::VectorXd& actions, GridTrace*) {
        Eigen::VectorXd d(actions.size());
        for (Eigen::Index i = 0; i < actions.size(); ++i) d(i) = truth.mean(s(i), actions(i), mu);
        return d;
      },
      trace);
}

double hallucinated_objective(const HallucinatedModel& model, const NetworkPolicy& policy, const EtaNetwork& eta,
                              const GridDistribution& mu0, const SwarmConfig& env, GridTrace* trace) {
  if (model.gp == nullptr) throw PlanningError("hallucinated objective needs a model");
  const Eigen::VectorXd s = grid_points(mu0.size());
  Eigen::VectorXd mean, sd;
  return rollout_objective(
      mu0, env, policy,
      [&](const GridDistribution& mu, const Eigen::MatrixXd& features, const Eigen::VectorXd& actions,
          GridTrace* tr) {
        model.gp->predict_batch(model_queries(mu, features, actions, model.model_features), mean, sd);
        const Eigen::VectorXd e = eta.values(features, policy.normalized(actions));
        if (e.minCoeff() < -1.0 || e.maxCoeff() > 1.0) throw PlanningError("eta left [-1, 1]");
        if (tr) tr->eta.push_back(e);
        return Eigen::VectorXd(s + mean + model.beta * sd.cwiseProduct(e));
      },
      trace);
}

NetworkPolicy make_policy(const SwarmConfig& env, const OptimizerConfig& opt, std::vector<double> params) {
  return NetworkPolicy(opt.features, opt.hidden_width, env.a_min, env.a_max, std::move(params));
}

EtaNetwork make_eta(const OptimizerConfig& opt, std::vector<double> params) {
  return EtaNetwork(opt.features, opt.hidden_width, std::move(params));
}

PlanResult plan(const HallucinatedModel& model, const GridDistribution& mu0, const SwarmConfig& env,
                const OptimizerConfig& opt, std::uint64_t seed, const PlanOptions& options) {
  opt.validate();
  if (model.gp == nullptr) throw PlanningError("plan needs a model");
  const std::size_t np = NetworkPolicy::layout_for(opt.features, opt.hidden_width).size();
  const std::size_t ne = EtaNetwork::layout_for(opt.features, opt.hidden_width).size();

  if (options.freeze_eta) {
    const EtaNetwork zero_eta = make_eta(opt);
    std::vector<double> init(options.init_mean.begin(),
                             options.init_mean.begin() + static_cast<std::ptrdiff_t>(std::min(np, options.init_mean.size())));
    const std::size_t blocks[] = {np};
    CemResult r = cem_maximize(
        discarding_failures([&](std::span<const double> x) {
          return hallucinated_objective(model, make_policy(env, opt, {x.begin(), x.end()}), zero_eta, mu0, env);
        }),
        blocks, opt.cem, seed, init, options.injected);
    return {std::move(r.best), std::vector<double>(ne, 0.0), r.best_score, r.evals, std::move(r.history)};
  }

  std::vector<std::vector<double>> injected = options.injected;
  long extra_evals = 0;
  if (opt.optimism_guard) {
    PlanOptions frozen = options;
    frozen.freeze_eta = true;
    frozen.injected.clear();
    for (const auto& c : options.injected) frozen.injected.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(np));
    const PlanResult base = plan(model, mu0, env, opt, seed, frozen);
    extra_evals = base.evals;
    std::vector<double> joint = base.policy;
    joint.resize(np + ne, 0.0);
    injected.push_back(std::move(joint));
  }

  const std::size_t blocks[] = {np, ne};
  CemResult r = cem_maximize(
      discarding_failures([&](std::span<const double> x) {
        const NetworkPolicy pi = make_policy(env, opt, {x.begin(), x.begin() + static_cast<std::ptrdiff_t>(np)});
        const EtaNetwork eta = make_eta(opt, {x.begin() + static_cast<std::ptrdiff_t>(np), x.end()});
        return hallucinated_objective(model, pi, eta, mu0, env);
      }),
      blocks, opt.cem, seed, options.init_mean, injected);
  PlanResult out;
  out.policy.assign(r.best.begin(), r.best.begin() + static_cast<std::ptrdiff_t>(np));
  out.eta.assign(r.best.begin() + static_cast<std::ptrdiff_t>(np), r.best.end());
  out.predicted_j = r.best_score;
  out.evals = r.evals + extra_evals;
  out.history = std::move(r.history);
  return out;
}

PlanResult plan_known_dynamics(const DriftFn& truth, const GridDistribution& mu0, const SwarmConfig& env,
                               const OptimizerConfig& opt, std::uint64_t seed, const PlanOptions& options) {
  opt.validate();
  const std::size_t np = NetworkPolicy::layout_for(opt.features, opt.hidden_width).size();
  const std::size_t ne = EtaNetwork::layout_for(opt.features, opt.hidden_width).size();
  std::vector<double> init(options.init_mean.begin(),
                           options.init_mean.begin() + static_cast<std::ptrdiff_t>(std::min(np, options.init_mean.size())));
  const std::size_t blocks[] = {np};
  CemResult r = cem_maximize(
      discarding_failures([&](std::span<const double> x) {
        return known_objective(truth, make_policy(env, opt, {x.begin(), x.end()}), mu0, env);
      }),
      blocks, opt.cem, seed, init, options.injected);
  return {std::move(r.best), std::vector<double>(ne, 0.0), r.best_score, r.evals, std::move(r.history)};
}

}  // namespace mfucrl
