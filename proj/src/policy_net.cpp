#include "mfucrl/policy_net.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mfucrl/error.hpp"

namespace mfucrl {

Eigen::ArrayXd squash(const Eigen::ArrayXd& x) { return 1.0 - 2.0 / ((2.0 * x).exp() + 1.0); }

Eigen::VectorXd mlp_forward(const MlpLayout& layout, std::span<const double> params, const Eigen::MatrixXd& features) {
  if (params.size() != layout.size())
    throw ConfigError("planner.hidden_width", "parameter vector has " + std::to_string(params.size()) +
                                                  " entries, layout needs " + std::to_string(layout.size()));
  if (features.cols() != layout.inputs) throw FeatureDimError("network input width mismatch");
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const int in = layout.inputs;
  const int hid = layout.hidden;
  const Eigen::Map<const RowMajor> w1(params.data(), hid, in);
  const Eigen::Map<const Eigen::RowVectorXd> b1(params.data() + in * hid, hid);
  const Eigen::Map<const Eigen::VectorXd> w2(params.data() + in * hid + hid, hid);
  const double b2 = params[static_cast<std::size_t>(in * hid + 2 * hid)];

  Eigen::MatrixXd pre = features * w1.transpose();
  pre.rowwise() += b1;
  const Eigen::MatrixXd hidden = (1.0 - 2.0 / ((2.0 * pre.array()).exp() + 1.0)).matrix();
  return (hidden * w2).array() + b2;
}

namespace {

// (cos 2 pi m_i, sin 2 pi m_i) for the most recently used grid size.
const Eigen::MatrixX2d& grid_trig(int m) {
  thread_local Eigen::MatrixX2d cache;
  if (cache.rows() != m) {
    cache.resize(m, 2);
    for (int i = 0; i < m; ++i) {
      const double angle = 2.0 * std::numbers::pi * (static_cast<double>(i) / m);
      cache(i, 0) = std::cos(angle);
      cache(i, 1) = std::sin(angle);
    }
  }
  return cache;
}

}  // namespace

Eigen::MatrixXd grid_policy_features(const GridDistribution& mu, const FeatureMode& mode) {
  const int m = mu.size();
  Eigen::MatrixXd x(m, 2 + mode.width());
  x.leftCols<2>() = grid_trig(m);
  std::vector<double> pooled;
  if (mode.kind == FeatureMode::Kind::Global) pooled = distribution_features(mu, 0.0, mode);
  for (int i = 0; i < m; ++i) {
    if (mode.kind == FeatureMode::Kind::Local) x(i, 2) = mu.height(i);
    for (std::size_t f = 0; f < pooled.size(); ++f) x(i, 2 + static_cast<Eigen::Index>(f)) = pooled[f];
  }
  return x;
}

Eigen::MatrixXd point_policy_features(double s, const GridDistribution& mu, const FeatureMode& mode) {
  const auto feat = distribution_features(mu, s, mode);
  Eigen::MatrixXd x(1, 2 + static_cast<Eigen::Index>(feat.size()));
  const double angle = 2.0 * std::numbers::pi * s;
  x(0, 0) = std::cos(angle);
  x(0, 1) = std::sin(angle);
  for (std::size_t f = 0; f < feat.size(); ++f) x(0, 2 + static_cast<Eigen::Index>(f)) = feat[f];
  return x;
}

MlpLayout NetworkPolicy::layout_for(const FeatureMode& features, int hidden) {
  return {2 + features.width(), hidden};
}

NetworkPolicy::NetworkPolicy(FeatureMode features, int hidden, double a_min, double a_max, std::vector<double> params)
    : features_(features), layout_(layout_for(features, hidden)), a_min_(a_min), a_max_(a_max),
      params_(std::move(params)) {
  if (hidden < 1) throw ConfigError("planner.hidden_width", "must be at least 1");
  if (!(a_min < a_max)) throw ConfigError("env.a_min", "a_min must be below a_max");
  if (params_.empty()) params_.assign(layout_.size(), 0.0);
  if (params_.size() != layout_.size())
    throw ConfigError("planner.hidden_width", "policy parameter count does not match the network layout");
}

Eigen::VectorXd NetworkPolicy::actions(const Eigen::MatrixXd& features) const {
  const double mid = 0.5 * (a_max_ + a_min_);
  const double half = 0.5 * (a_max_ - a_min_);
  const Eigen::ArrayXd t = squash(mlp_forward(layout_, params_, features).array());
  return (mid + half * t).max(a_min_).min(a_max_).matrix();
}

Eigen::VectorXd NetworkPolicy::actions_on_grid(const GridDistribution& mu) const {
  return actions(grid_policy_features(mu, features_));
}

double NetworkPolicy::action(double s, const GridDistribution& mu) const {
  return actions(point_policy_features(s, mu, features_))(0);
}

Eigen::VectorXd NetworkPolicy::normalized(const Eigen::VectorXd& actions) const {
  const double mid = 0.5 * (a_max_ + a_min_);
  const double half = 0.5 * (a_max_ - a_min_);
  return ((actions.array() - mid) / half).matrix();
}

PolicyFn NetworkPolicy::as_policy_fn() const {
  return [self = *this](double s, const GridDistribution& mu) { return self.action(s, mu); };
}

MlpLayout EtaNetwork::layout_for(const FeatureMode& features, int hidden) {
  return {3 + features.width(), hidden};
}

EtaNetwork::EtaNetwork(FeatureMode features, int hidden, std::vector<double> params)
    : features_(features), layout_(layout_for(features, hidden)), params_(std::move(params)) {
  if (hidden < 1) throw ConfigError("planner.hidden_width", "must be at least 1");
  if (params_.empty()) params_.assign(layout_.size(), 0.0);
  if (params_.size() != layout_.size())
    throw ConfigError("planner.hidden_width", "eta parameter count does not match the network layout");
}

Eigen::VectorXd EtaNetwork::values(const Eigen::MatrixXd& policy_features,
                                   const Eigen::VectorXd& normalized_actions) const {
  Eigen::MatrixXd x(policy_features.rows(), policy_features.cols() + 1);
  x << policy_features, normalized_actions;
  return squash(mlp_forward(layout_, params_, x).array()).matrix();
}

}  // namespace mfucrl
