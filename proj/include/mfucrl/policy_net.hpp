#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "mfucrl/flow.hpp"
#include "mfucrl/gp.hpp"
#include "mfucrl/torus.hpp"

namespace mfucrl {

/// Shape of a one-hidden-layer tanh network with scalar output. The flat
/// parameter layout is (hidden x inputs weights, row-major), hidden bias,
/// hidden-to-output weights, output bias.
struct MlpLayout {
  int inputs = 0;
  int hidden = 0;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(inputs * hidden + 2 * hidden + 1);
  }
};

/// tanh(x) = 1 - 2 / (exp(2x) + 1), evaluated with Eigen's vectorized exp.
Eigen::ArrayXd squash(const Eigen::ArrayXd& x);

/// Raw network output (before squashing) for each row of `features`.
Eigen::VectorXd mlp_forward(const MlpLayout& layout, std::span<const double> params, const Eigen::MatrixXd& features);

/// Policy inputs for every grid node: (cos 2 pi m_i, sin 2 pi m_i, features).
Eigen::MatrixXd grid_policy_features(const GridDistribution& mu, const FeatureMode& mode);

/// Policy inputs at an arbitrary torus point.
Eigen::MatrixXd point_policy_features(double s, const GridDistribution& mu, const FeatureMode& mode);

/// Time-homogeneous policy pi(s, mu) = mid + half * tanh(net(s, mu)), which
/// keeps every action inside [a_min, a_max].
class NetworkPolicy {
 public:
  NetworkPolicy(FeatureMode features, int hidden, double a_min, double a_max, std::vector<double> params = {});

  static MlpLayout layout_for(const FeatureMode& features, int hidden);

  const MlpLayout& layout() const noexcept { return layout_; }
  const FeatureMode& features() const noexcept { return features_; }
  std::span<const double> params() const noexcept { return params_; }
  double a_min() const noexcept { return a_min_; }
  double a_max() const noexcept { return a_max_; }

  Eigen::VectorXd actions(const Eigen::MatrixXd& features) const;
  Eigen::VectorXd actions_on_grid(const GridDistribution& mu) const;
  double action(double s, const GridDistribution& mu) const;
  /// Maps actions into [-1, 1] relative to the action interval.
  Eigen::VectorXd normalized(const Eigen::VectorXd& actions) const;

  PolicyFn as_policy_fn() const;

 private:
  FeatureMode features_;
  MlpLayout layout_;
  double a_min_;
  double a_max_;
  std::vector<double> params_;
};

/// Auxiliary control eta(z) = tanh(net(policy features, normalized action)),
/// always in [-1, 1].
class EtaNetwork {
 public:
  EtaNetwork(FeatureMode features, int hidden, std::vector<double> params = {});

  static MlpLayout layout_for(const FeatureMode& features, int hidden);

  const MlpLayout& layout() const noexcept { return layout_; }
  std::span<const double> params() const noexcept { return params_; }

  /// `policy_features` has one row per query; `normalized_actions` matches.
  Eigen::VectorXd values(const Eigen::MatrixXd& policy_features, const Eigen::VectorXd& normalized_actions) const;

 private:
  FeatureMode features_;
  MlpLayout layout_;
  std::vector<double> params_;
};

}  // namespace mfucrl
