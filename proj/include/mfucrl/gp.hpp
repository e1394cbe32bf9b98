#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "mfucrl/torus.hpp"

namespace mfucrl {

enum class KernelKind { SquaredExponential, Matern52, RationalQuadratic, Linear };

/// What happens once the data outgrow the cap: keep an exact posterior on a
/// selected subset, or project all data onto selected inducing points.
enum class GpApprox { Subset, Projected };

std::string to_string(GpApprox approx);
GpApprox parse_gp_approx(const std::string& name);

std::string to_string(KernelKind kind);
KernelKind parse_kernel_kind(const std::string& name);

/// Covariance function over joint inputs.
///
/// With scaled distance r^2 = sum_d ((x_d - y_d) / l_d)^2:
///   SquaredExponential  v exp(-r^2)
///   Matern52            v (1 + sqrt5 r + 5 r^2 / 3) exp(-sqrt5 r)
///   RationalQuadratic   v (1 + r^2 / (2 alpha))^(-alpha)
///   Linear              v sum_d x_d y_d / l_d^2
/// A single lengthscale is broadcast to every coordinate.
struct KernelSpec {
  KernelKind kind = KernelKind::SquaredExponential;
  std::vector<double> lengthscales{1.0};
  double variance = 1.0;
  double alpha = 1.0;  // RationalQuadratic shape

  bool stationary() const noexcept { return kind != KernelKind::Linear; }
  double lengthscale(std::size_t d) const { return lengthscales.size() == 1 ? lengthscales[0] : lengthscales[d]; }
  /// Throws ConfigError when hyperparameters are non-positive or the
  /// lengthscale count does not fit `dim`.
  void validate(std::size_t dim) const;
  /// Throws FeatureDimError if the inputs differ in length.
  double operator()(std::span<const double> x, std::span<const double> y) const;

  bool operator==(const KernelSpec&) const = default;
};

/// Encoding of the distribution argument of the model input.
struct FeatureMode {
  enum class Kind { Local, Global, None };
  Kind kind = Kind::Local;
  int pooled = 0;  // bins of the pooled histogram, Global only

  int width() const noexcept { return kind == Kind::Local ? 1 : kind == Kind::Global ? pooled : 0; }
  std::string to_string() const;
  /// Parses "local", "none" or "global(F)".
  static FeatureMode parse(const std::string& text);

  bool operator==(const FeatureMode&) const = default;
};

/// Model input z = (cos 2 pi s, sin 2 pi s, a, distribution features).
struct JointInput {
  double cos_s = 1.0;
  double sin_s = 0.0;
  double action = 0.0;
  std::vector<double> mu_feat;

  std::size_t dim() const noexcept { return 3 + mu_feat.size(); }
  std::vector<double> flatten() const;
};

/// Distribution features of mu as seen from s. Throws ConfigError when a
/// Global pooling width does not divide the grid size.
std::vector<double> distribution_features(const GridDistribution& mu, double s, const FeatureMode& mode);

/// Same as distribution_features but for grid point i, without interpolation.
std::vector<double> distribution_features_at_node(const GridDistribution& mu, int i, const FeatureMode& mode);

JointInput make_joint_input(double s, double a, const GridDistribution& mu, const FeatureMode& mode);

struct GpPrediction {
  double mean = 0.0;
  double std = 0.0;
};

/// Gaussian-process posterior over scalar displacements.
///
/// Holds the (possibly subset) training inputs, the Cholesky factor of
/// K + noise_var I and the weights (K + noise_var I)^-1 y. Immutable once
/// built; prediction is const and thread-safe.
class GpPosterior {
 public:
  /// Posterior with no data: mean 0, variance k(z, z).
  static GpPosterior prior(KernelSpec kernel, double noise_var, std::size_t dim);

  const KernelSpec& kernel() const noexcept { return kernel_; }
  double noise_var() const noexcept { return noise_var_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(inputs_.rows()); }
  bool empty() const noexcept { return inputs_.rows() == 0; }
  const Eigen::MatrixXd& inputs() const noexcept { return inputs_; }
  const Eigen::VectorXd& targets() const noexcept { return targets_; }
  bool projected() const noexcept { return projected_; }
  /// Full training set of a projected posterior (empty otherwise).
  const Eigen::MatrixXd& data_inputs() const noexcept { return data_inputs_; }
  const Eigen::VectorXd& data_targets() const noexcept { return data_targets_; }
  /// Indices of the retained (or inducing) points in the dataset passed to fit.
  const std::vector<std::size_t>& retained() const noexcept { return retained_; }
  /// 0.5 log det(I + K / noise_var) over the retained points; for a projected
  /// posterior K is the Nystrom approximation over all data.
  double info_gain() const noexcept { return info_gain_; }
  double jitter() const noexcept { return jitter_; }

  GpPrediction predict(std::span<const double> z) const;
  GpPrediction predict(const JointInput& z) const { return predict(z.flatten()); }

  /// Row-wise prediction for a batch of inputs (one input per row).
  void predict_batch(const Eigen::MatrixXd& queries, Eigen::VectorXd& mean, Eigen::VectorXd& std) const;

 private:
  friend GpPosterior fit(const KernelSpec&, const Eigen::MatrixXd&, const Eigen::VectorXd&, double, std::size_t,
                         GpApprox);
  friend GpPosterior fit_exact(const KernelSpec&, Eigen::MatrixXd, Eigen::VectorXd, double);
  friend double log_marginal_likelihood(const KernelSpec&, const Eigen::MatrixXd&, const Eigen::VectorXd&, double);
  friend GpPosterior fit_projected(const KernelSpec&, Eigen::MatrixXd, Eigen::VectorXd, double,
                                   std::vector<std::size_t>);

  KernelSpec kernel_;
  double noise_var_ = 1.0;
  std::size_t dim_ = 0;
  double jitter_ = 0.0;
  double info_gain_ = 0.0;
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  Eigen::MatrixXd chol_;  // lower triangular
  Eigen::VectorXd weights_;
  std::vector<std::size_t> retained_;
  bool projected_ = false;
  Eigen::MatrixXd data_inputs_;
  Eigen::VectorXd data_targets_;
  Eigen::MatrixXd reduction_;  // projected: variance = k(z,z) - k_m' R k_m
};

/// Cross-covariance matrix k(a_i, b_j).
Eigen::MatrixXd kernel_matrix(const KernelSpec& kernel, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Exact posterior on all rows of `inputs`. Throws FitError if K + noise_var I
/// cannot be factorized even with jitter up to 1e-6.
GpPosterior fit_exact(const KernelSpec& kernel, Eigen::MatrixXd inputs, Eigen::VectorXd targets, double noise_var);

/// Exact posterior when the data fit within `subset_cap`, otherwise the exact
/// posterior on a greedily chosen subset: each added point maximizes the
/// current posterior variance among the remaining ones (lowest index wins
/// ties).
GpPosterior fit(const KernelSpec& kernel, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                double noise_var, std::size_t subset_cap, GpApprox approx = GpApprox::Subset);

/// Deterministic-training-conditional posterior: every data point enters
/// through the inducing rows `inducing` (projected-process approximation).
GpPosterior fit_projected(const KernelSpec& kernel, Eigen::MatrixXd inputs, Eigen::VectorXd targets, double noise_var,
                          std::vector<std::size_t> inducing);

/// Greedy max-variance subset selection, returned in ascending index order.
std::vector<std::size_t> select_subset(const KernelSpec& kernel, const Eigen::MatrixXd& inputs, double noise_var,
                                       std::size_t cap);

/// Exact log marginal likelihood log p(y | X) under `kernel` and `noise_var`.
double log_marginal_likelihood(const KernelSpec& kernel, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                               double noise_var);

/// Offline grid search over per-coordinate lengthscales: cyclic coordinate
/// ascent of the log marginal likelihood, each coordinate drawn from `grid`,
/// evaluated on at most `max_points` greedily selected rows. Deterministic.
/// Returns the kernel with the chosen lengthscales (one per coordinate).
KernelSpec tune_lengthscales(const KernelSpec& kernel, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                             double noise_var, const std::vector<double>& grid, std::size_t max_points = 256,
                             int sweeps = 2);

/// Confidence-scale rule.
struct BetaMode {
  enum class Kind { Fixed, Theory };
  Kind kind = Kind::Fixed;
  double value = 2.0;       // Fixed
  double norm_bound = 1.0;  // Theory: RKHS norm bound B_f
  double sub_gaussian = 1.0;
  double delta = 0.05;

  void validate() const;

  bool operator==(const BetaMode&) const = default;
};

/// Fixed: the configured value. Theory:
///   B_f + (sigma / sqrt(noise_var)) sqrt(2 (log(1/delta) + info_gain)).
double beta(const GpPosterior& gp, const BetaMode& mode);

}  // namespace mfucrl
