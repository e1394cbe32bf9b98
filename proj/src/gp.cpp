#include "mfucrl/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <regex>

#include "mfucrl/error.hpp"

namespace mfucrl {

namespace {

const double kSqrt5 = std::sqrt(5.0);

double stationary_profile(const KernelSpec& k, double r2) {
  switch (k.kind) {
    case KernelKind::SquaredExponential:
      return k.variance * std::exp(-r2);
    case KernelKind::Matern52: {
      const double r = std::sqrt(r2);
      return k.variance * (1.0 + kSqrt5 * r + 5.0 * r2 / 3.0) * std::exp(-kSqrt5 * r);
    }
    case KernelKind::RationalQuadratic:
      return k.variance * std::pow(1.0 + r2 / (2.0 * k.alpha), -k.alpha);
    case KernelKind::Linear:
      break;
  }
  return 0.0;
}

Eigen::RowVectorXd inverse_lengthscales(const KernelSpec& k, Eigen::Index dim) {
  Eigen::RowVectorXd inv(dim);
  for (Eigen::Index d = 0; d < dim; ++d) inv(d) = 1.0 / k.lengthscale(static_cast<std::size_t>(d));
  return inv;
}

// k(z, z) for every row.
Eigen::VectorXd kernel_diagonal(const KernelSpec& k, const Eigen::MatrixXd& z) {
  if (k.stationary()) return Eigen::VectorXd::Constant(z.rows(), k.variance);
  const Eigen::MatrixXd scaled = z.array().rowwise() * inverse_lengthscales(k, z.cols()).array();
  return k.variance * scaled.rowwise().squaredNorm();
}

}  // namespace

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::SquaredExponential: return "se";
    case KernelKind::Matern52: return "matern52";
    case KernelKind::RationalQuadratic: return "rq";
    case KernelKind::Linear: return "linear";
  }
  return "se";
}

KernelKind parse_kernel_kind(const std::string& name) {
  if (name == "se") return KernelKind::SquaredExponential;
  if (name == "matern52") return KernelKind::Matern52;
  if (name == "rq") return KernelKind::RationalQuadratic;
  if (name == "linear") return KernelKind::Linear;
  throw ConfigError("model.kernel", "unknown kernel \"" + name + "\" (se, matern52, rq, linear)");
}

std::string to_string(GpApprox approx) { return approx == GpApprox::Subset ? "subset" : "projected"; }

GpApprox parse_gp_approx(const std::string& name) {
  if (name == "subset") return GpApprox::Subset;
  if (name == "projected") return GpApprox::Projected;
  throw ConfigError("model.approx", "unknown approximation \"" + name + "\" (subset, projected)");
}

void KernelSpec::validate(std::size_t dim) const {
  if (lengthscales.empty()) throw ConfigError("model.lengthscales", "at least one lengthscale required");
  if (lengthscales.size() != 1 && lengthscales.size() != dim)
    throw ConfigError("model.lengthscales", "expected 1 or " + std::to_string(dim) + " lengthscales, got " +
                                                std::to_string(lengthscales.size()));
  for (double l : lengthscales)
    if (!(l > 0.0)) throw ConfigError("model.lengthscales", "lengthscales must be positive");
  if (!(variance > 0.0)) throw ConfigError("model.variance", "must be positive");
  if (!(alpha > 0.0)) throw ConfigError("model.alpha", "must be positive");
}

double KernelSpec::operator()(std::span<const double> x, std::span<const double> y) const {
  if (x.size() != y.size())
    throw FeatureDimError("kernel inputs have dimensions " + std::to_string(x.size()) + " and " +
                          std::to_string(y.size()));
  if (lengthscales.size() != 1 && lengthscales.size() != x.size())
    throw FeatureDimError("lengthscale count does not match input dimension");
  double acc = 0.0;
  if (kind == KernelKind::Linear) {
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double l = lengthscale(d);
      acc += x[d] * y[d] / (l * l);
    }
    return variance * acc;
  }
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double diff = (x[d] - y[d]) / lengthscale(d);
    acc += diff * diff;
  }
  return stationary_profile(*this, acc);
}

std::string FeatureMode::to_string() const {
  switch (kind) {
    case Kind::Local: return "local";
    case Kind::None: return "none";
    case Kind::Global: return "global(" + std::to_string(pooled) + ")";
  }
  return "local";
}

FeatureMode FeatureMode::parse(const std::string& text) {
  if (text == "local") return {Kind::Local, 0};
  if (text == "none") return {Kind::None, 0};
  static const std::regex global(R"(global\(\s*(\d+)\s*\))");
  std::smatch match;
  if (std::regex_match(text, match, global)) {
    const int f = std::stoi(match[1].str());
    if (f < 1) throw ConfigError("feat_mode", "global feature count must be positive");
    return {Kind::Global, f};
  }
  throw ConfigError("feat_mode", "expected local, none or global(F), got \"" + text + "\"");
}

std::vector<double> JointInput::flatten() const {
  std::vector<double> z{cos_s, sin_s, action};
  z.insert(z.end(), mu_feat.begin(), mu_feat.end());
  return z;
}

namespace {

std::vector<double> pooled_features(const GridDistribution& mu, int pooled) {
  const int m = mu.size();
  if (pooled < 1 || m % pooled != 0)
    throw ConfigError("feat_mode", "global(" + std::to_string(pooled) + ") does not divide grid size " +
                                       std::to_string(m));
  const int width = m / pooled;
  std::vector<double> out(static_cast<std::size_t>(pooled), 0.0);
  for (int i = 0; i < m; ++i) out[static_cast<std::size_t>(i / width)] += mu.height(i);
  for (double& v : out) v /= width;
  return out;
}

}  // namespace

std::vector<double> distribution_features(const GridDistribution& mu, double s, const FeatureMode& mode) {
  switch (mode.kind) {
    case FeatureMode::Kind::Local: return {mu.density_at(s)};
    case FeatureMode::Kind::Global: return pooled_features(mu, mode.pooled);
    case FeatureMode::Kind::None: return {};
  }
  return {};
}

std::vector<double> distribution_features_at_node(const GridDistribution& mu, int i, const FeatureMode& mode) {
  if (mode.kind == FeatureMode::Kind::Local) return {mu.height(i)};
  return distribution_features(mu, mu.grid_point(i), mode);
}

JointInput make_joint_input(double s, double a, const GridDistribution& mu, const FeatureMode& mode) {
  const double angle = 2.0 * std::numbers::pi * s;
  return JointInput{std::cos(angle), std::sin(angle), a, distribution_features(mu, s, mode)};
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& kernel, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols())
    throw FeatureDimError("kernel inputs have dimensions " + std::to_string(a.cols()) + " and " +
                          std::to_string(b.cols()));
  const Eigen::RowVectorXd inv = inverse_lengthscales(kernel, a.cols());
  const Eigen::MatrixXd sa = a.array().rowwise() * inv.array();
  const Eigen::MatrixXd sb = b.array().rowwise() * inv.array();
  Eigen::MatrixXd cross = sa * sb.transpose();
  if (kernel.kind == KernelKind::Linear) return kernel.variance * cross;

  const Eigen::VectorXd na = sa.rowwise().squaredNorm();
  const Eigen::VectorXd nb = sb.rowwise().squaredNorm();
  Eigen::ArrayXXd r2 = (-2.0 * cross).array();
  r2.colwise() += na.array();
  r2.rowwise() += nb.transpose().array();
  r2 = r2.max(0.0);
  switch (kernel.kind) {
    case KernelKind::SquaredExponential:
      return (kernel.variance * (-r2).exp()).matrix();
    case KernelKind::Matern52: {
      const Eigen::ArrayXXd r = r2.sqrt();
      return (kernel.variance * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) * (-kSqrt5 * r).exp()).matrix();
    }
    case KernelKind::RationalQuadratic:
      return (kernel.variance * (1.0 + r2 / (2.0 * kernel.alpha)).pow(-kernel.alpha)).matrix();
    case KernelKind::Linear:
      break;
  }
  return cross;
}

GpPosterior GpPosterior::prior(KernelSpec kernel, double noise_var, std::size_t dim) {
  kernel.validate(dim);
  if (!(noise_var > 0.0)) throw ConfigError("model.noise_var", "must be positive");
  GpPosterior gp;
  gp.kernel_ = std::move(kernel);
  gp.noise_var_ = noise_var;
  gp.dim_ = dim;
  gp.inputs_.resize(0, static_cast<Eigen::Index>(dim));
  return gp;
}

GpPrediction GpPosterior::predict(std::span<const double> z) const {
  if (z.size() != dim_)
    throw FeatureDimError("query has dimension " + std::to_string(z.size()) + ", model expects " +
                          std::to_string(dim_));
  Eigen::MatrixXd q(1, static_cast<Eigen::Index>(dim_));
  for (std::size_t d = 0; d < dim_; ++d) q(0, static_cast<Eigen::Index>(d)) = z[d];
  Eigen::VectorXd mean, sd;
  predict_batch(q, mean, sd);
  return {mean(0), sd(0)};
}

void GpPosterior::predict_batch(const Eigen::MatrixXd& queries, Eigen::VectorXd& mean, Eigen::VectorXd& std) const {
  if (static_cast<std::size_t>(queries.cols()) != dim_)
    throw FeatureDimError("query has dimension " + std::to_string(queries.cols()) + ", model expects " +
                          std::to_string(dim_));
  const Eigen::VectorXd prior_var = kernel_diagonal(kernel_, queries);
  if (empty()) {
    mean = Eigen::VectorXd::Zero(queries.rows());
    std = prior_var.cwiseMax(0.0).cwiseSqrt();
    return;
  }
  const Eigen::MatrixXd cross = kernel_matrix(kernel_, queries, inputs_);
  mean = cross * weights_;
  if (projected_) {
    const Eigen::MatrixXd t = cross * reduction_;
    std = (prior_var - t.cwiseProduct(cross).rowwise().sum()).cwiseMax(0.0).cwiseSqrt();
    return;
  }
  const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(cross.transpose());
  std = (prior_var - v.colwise().squaredNorm().transpose()).cwiseMax(0.0).cwiseSqrt();
}

GpPosterior fit_exact(const KernelSpec& kernel, Eigen::MatrixXd inputs, Eigen::VectorXd targets, double noise_var) {
  const auto dim = static_cast<std::size_t>(inputs.cols());
  GpPosterior gp = GpPosterior::prior(kernel, noise_var, dim);
  if (inputs.rows() == 0) throw FitError("fit requires at least one data point");
  if (inputs.rows() != targets.size()) throw FitError("inputs and targets differ in length");
  if (!inputs.allFinite() || !targets.allFinite()) throw FitError("non-finite training data");

  Eigen::MatrixXd k = kernel_matrix(kernel, inputs, inputs);
  k.diagonal() = kernel_diagonal(kernel, inputs);

  static constexpr double kJitterLadder[] = {0.0, 1e-12, 1e-10, 1e-8, 1e-6};
  for (double jitter : kJitterLadder) {
    Eigen::MatrixXd a = k;
    a.diagonal().array() += noise_var + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd l = llt.matrixL();
    if (!(l.diagonal().array() > 0.0).all()) continue;
    gp.jitter_ = jitter;
    gp.chol_ = std::move(l);
    gp.weights_ = llt.solve(targets);
    const auto n = static_cast<double>(inputs.rows());
    gp.info_gain_ = std::max(0.0, gp.chol_.diagonal().array().log().sum() - 0.5 * n * std::log(noise_var));
    gp.inputs_ = std::move(inputs);
    gp.targets_ = std::move(targets);
    gp.retained_.resize(static_cast<std::size_t>(gp.inputs_.rows()));
    for (std::size_t i = 0; i < gp.retained_.size(); ++i) gp.retained_[i] = i;
    return gp;
  }
  throw FitError("kernel matrix is not positive definite even with jitter 1e-6");
}

std::vector<std::size_t> select_subset(const KernelSpec& kernel, const Eigen::MatrixXd& inputs, double noise_var,
                                       std::size_t cap) {
  const Eigen::Index n = inputs.rows();
  const auto take = static_cast<Eigen::Index>(std::min<std::size_t>(cap, static_cast<std::size_t>(n)));
  Eigen::VectorXd var = kernel_diagonal(kernel, inputs);
  // Row i holds L^-1 k_S(x_i) for the selected set S.
  Eigen::MatrixXd proj = Eigen::MatrixXd::Zero(n, take);
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  std::vector<std::size_t> chosen;
  chosen.reserve(static_cast<std::size_t>(take));

  for (Eigen::Index step = 0; step < take; ++step) {
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      if (best < 0 || var(i) > var(best)) best = i;
    }
    used[static_cast<std::size_t>(best)] = 1;
    chosen.push_back(static_cast<std::size_t>(best));

    const double pivot = std::sqrt(std::max(var(best), 0.0) + noise_var);
    const Eigen::VectorXd column = kernel_matrix(kernel, inputs, inputs.row(best));
    const Eigen::VectorXd overlap = proj.leftCols(step) * proj.row(best).head(step).transpose();
    Eigen::VectorXd next = (column - overlap) / pivot;
    next(best) = (var(best)) / pivot;
    proj.col(step) = next;
    var -= next.cwiseAbs2();
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

GpPosterior fit_projected(const KernelSpec& kernel, Eigen::MatrixXd inputs, Eigen::VectorXd targets, double noise_var,
                          std::vector<std::size_t> inducing) {
  const auto dim = static_cast<std::size_t>(inputs.cols());
  GpPosterior gp = GpPosterior::prior(kernel, noise_var, dim);
  if (inputs.rows() == 0 || inducing.empty()) throw FitError("fit requires at least one data point");
  if (inputs.rows() != targets.size()) throw FitError("inputs and targets differ in length");
  if (!inputs.allFinite() || !targets.allFinite()) throw FitError("non-finite training data");
  const auto m = static_cast<Eigen::Index>(inducing.size());
  Eigen::MatrixXd z(m, inputs.cols());
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto idx = inducing[static_cast<std::size_t>(r)];
    if (idx >= static_cast<std::size_t>(inputs.rows())) throw FitError("inducing index out of range");
    z.row(r) = inputs.row(static_cast<Eigen::Index>(idx));
  }

  Eigen::MatrixXd kmm = kernel_matrix(kernel, z, z);
  kmm.diagonal() = kernel_diagonal(kernel, z);
  // Inducing points carry no noise, so a small relative jitter is always used.
  const double scale = std::max(kmm.diagonal().maxCoeff(), 1e-300);
  static constexpr double kRelativeJitter[] = {1e-10, 1e-8, 1e-6};
  for (double rel : kRelativeJitter) {
    Eigen::MatrixXd a = kmm;
    a.diagonal().array() += rel * scale;
    Eigen::LLT<Eigen::MatrixXd> llt_m(a);
    if (llt_m.info() != Eigen::Success) continue;
    const Eigen::MatrixXd lm = llt_m.matrixL();
    if (!(lm.diagonal().array() > 0.0).all()) continue;

    // B = I + A A' / noise with A = Lm^-1 K_mn.
    const Eigen::MatrixXd a_mn = lm.triangularView<Eigen::Lower>().solve(kernel_matrix(kernel, z, inputs));
    Eigen::MatrixXd b = Eigen::MatrixXd::Identity(m, m);
    b.selfadjointView<Eigen::Lower>().rankUpdate(a_mn, 1.0 / noise_var);
    b = b.selfadjointView<Eigen::Lower>();
    Eigen::LLT<Eigen::MatrixXd> llt_b(b);
    if (llt_b.info() != Eigen::Success) continue;

    const Eigen::MatrixXd b_inv = llt_b.solve(Eigen::MatrixXd::Identity(m, m));
    const Eigen::MatrixXd lm_inv = lm.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(m, m));
    Eigen::MatrixXd r = lm_inv.transpose() * (Eigen::MatrixXd::Identity(m, m) - b_inv) * lm_inv;
    gp.reduction_ = 0.5 * (r + r.transpose());
    gp.weights_ = lm_inv.transpose() * (b_inv * (a_mn * targets)) / noise_var;
    gp.chol_ = lm;
    gp.jitter_ = rel * scale;
    const Eigen::MatrixXd lb = llt_b.matrixL();
    gp.info_gain_ = std::max(0.0, lb.diagonal().array().log().sum());
    gp.projected_ = true;
    gp.inputs_ = std::move(z);
    gp.targets_.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) gp.targets_(i) = targets(static_cast<Eigen::Index>(inducing[static_cast<std::size_t>(i)]));
    gp.data_inputs_ = std::move(inputs);
    gp.data_targets_ = std::move(targets);
    gp.retained_ = std::move(inducing);
    return gp;
  }
  throw FitError("inducing kernel matrix is not positive definite even with jitter 1e-6");
}

GpPosterior fit(const KernelSpec& kernel, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                double noise_var, std::size_t subset_cap, GpApprox approx) {
  if (inputs.rows() == 0) throw FitError("fit requires at least one data point");
  if (subset_cap == 0) throw ConfigError("model.subset_cap", "must be positive");
  if (static_cast<std::size_t>(inputs.rows()) <= subset_cap) return fit_exact(kernel, inputs, targets, noise_var);

  kernel.validate(static_cast<std::size_t>(inputs.cols()));
  const auto chosen = select_subset(kernel, inputs, noise_var, subset_cap);
  if (approx == GpApprox::Projected) return fit_projected(kernel, inputs, targets, noise_var, chosen);
  Eigen::MatrixXd sub_x(static_cast<Eigen::Index>(chosen.size()), inputs.cols());
  Eigen::VectorXd sub_y(static_cast<Eigen::Index>(chosen.size()));
  for (std::size_t r = 0; r < chosen.size(); ++r) {
    sub_x.row(static_cast<Eigen::Index>(r)) = inputs.row(static_cast<Eigen::Index>(chosen[r]));
    sub_y(static_cast<Eigen::Index>(r)) = targets(static_cast<Eigen::Index>(chosen[r]));
  }
  GpPosterior gp = fit_exact(kernel, std::move(sub_x), std::move(sub_y), noise_var);
  gp.retained_ = chosen;
  return gp;
}

double log_marginal_likelihood(const KernelSpec& kernel, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                               double noise_var) {
  const GpPosterior gp = fit_exact(kernel, inputs, targets, noise_var);
  // fit_exact keeps L with L L' = K + (noise + jitter) I and weights = (K + ...)^-1 y.
  const auto n = static_cast<double>(targets.size());
  return -0.5 * targets.dot(gp.weights_) - gp.chol_.diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

KernelSpec tune_lengthscales(const KernelSpec& kernel, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                             double noise_var, const std::vector<double>& grid, std::size_t max_points, int sweeps) {
  if (grid.empty()) throw ConfigError("tune.grid", "lengthscale grid is empty");
  for (double g : grid)
    if (!(g > 0.0)) throw ConfigError("tune.grid", "lengthscales must be positive");
  const auto dim = static_cast<std::size_t>(inputs.cols());
  kernel.validate(dim);

  KernelSpec best = kernel;
  best.lengthscales.resize(dim);
  for (std::size_t d = 0; d < dim; ++d) best.lengthscales[d] = kernel.lengthscale(d);

  const auto rows = select_subset(best, inputs, noise_var, max_points);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) = inputs.row(static_cast<Eigen::Index>(rows[r]));
    y(static_cast<Eigen::Index>(r)) = targets(static_cast<Eigen::Index>(rows[r]));
  }

  double best_ll = log_marginal_likelihood(best, x, y, noise_var);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    bool moved = false;
    for (std::size_t d = 0; d < dim; ++d) {
      for (double g : grid) {
        KernelSpec trial = best;
        trial.lengthscales[d] = g;
        const double ll = log_marginal_likelihood(trial, x, y, noise_var);
        if (ll > best_ll) {
          best_ll = ll;
          best = std::move(trial);
          moved = true;
        }
      }
    }
    if (!moved) break;
  }
  return best;
}

void BetaMode::validate() const {
  if (kind == Kind::Fixed) {
    if (!(value > 0.0)) throw ConfigError("model.beta", "fixed beta must be positive");
    return;
  }
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("model.beta_delta", "delta must lie in (0, 1)");
  if (!(norm_bound >= 0.0)) throw ConfigError("model.beta_norm_bound", "must be non-negative");
  if (!(sub_gaussian > 0.0)) throw ConfigError("model.beta_sub_gaussian", "must be positive");
}

double beta(const GpPosterior& gp, const BetaMode& mode) {
  mode.validate();
  if (mode.kind == BetaMode::Kind::Fixed) return mode.value;
  return mode.norm_bound + mode.sub_gaussian / std::sqrt(gp.noise_var()) *
                               std::sqrt(2.0 * (std::log(1.0 / mode.delta) + gp.info_gain()));
}

}  // namespace mfucrl
