#include "mfucrl/run_io.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

#include "mfucrl/error.hpp"

namespace mfucrl {

using nlohmann::json;

json to_json(const GridDistribution& dist) { return json(std::vector<double>(dist.heights().begin(), dist.heights().end())); }

GridDistribution distribution_from_json(const json& j) {
  return GridDistribution::unnormalized(j.get<std::vector<double>>());
}

namespace {

json beta_json(const BetaMode& b) {
  return {{"kind", b.kind == BetaMode::Kind::Fixed ? "fixed" : "theory"},
          {"value", b.value},
          {"norm_bound", b.norm_bound},
          {"sub_gaussian", b.sub_gaussian},
          {"delta", b.delta}};
}

BetaMode beta_from_json(const json& j) {
  BetaMode b;
  b.kind = j.at("kind").get<std::string>() == "fixed" ? BetaMode::Kind::Fixed : BetaMode::Kind::Theory;
  b.value = j.at("value").get<double>();
  b.norm_bound = j.at("norm_bound").get<double>();
  b.sub_gaussian = j.at("sub_gaussian").get<double>();
  b.delta = j.at("delta").get<double>();
  return b;
}

json episode_json(const EpisodeRecord& e) {
  return {{"t", e.t},
          {"J_real", e.j_real},
          {"J_predicted", e.j_predicted},
          {"J_star", e.j_star},
          {"regret", e.regret},
          {"sigma_sum", e.sigma_sum},
          {"n_data", e.n_data},
          {"beta", e.beta},
          {"wall_time_ms", e.wall_time_ms},
          {"w1_sum", e.w1_sum},
          {"policy", e.policy},
          {"eta", e.eta}};
}

EpisodeRecord episode_from_json(const json& j) {
  EpisodeRecord e;
  e.t = j.at("t").get<int>();
  e.j_real = j.at("J_real").get<double>();
  e.j_predicted = j.at("J_predicted").get<double>();
  e.j_star = j.at("J_star").get<double>();
  e.regret = j.at("regret").get<double>();
  e.sigma_sum = j.at("sigma_sum").get<double>();
  e.n_data = j.at("n_data").get<std::size_t>();
  e.beta = j.at("beta").get<double>();
  e.wall_time_ms = j.at("wall_time_ms").get<long>();
  e.w1_sum = j.at("w1_sum").get<double>();
  e.policy = j.at("policy").get<std::vector<double>>();
  e.eta = j.at("eta").get<std::vector<double>>();
  return e;
}

}  // namespace

json checkpoint_json(const GpPosterior& gp, const BetaMode& beta_mode) {
  const auto& k = gp.kernel();
  // A projected posterior needs every data point; the inducing rows are indices.
  const Eigen::MatrixXd& x = gp.projected() ? gp.data_inputs() : gp.inputs();
  const Eigen::VectorXd& y = gp.projected() ? gp.data_targets() : gp.targets();
  json inputs = json::array();
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index c = 0; c < x.cols(); ++c) row[static_cast<std::size_t>(c)] = x(r, c);
    inputs.push_back(row);
  }
  std::vector<double> targets(y.data(), y.data() + y.size());
  json out{{"kernel", to_string(k.kind)},
           {"hyperparams", {{"lengthscales", k.lengthscales}, {"variance", k.variance}, {"alpha", k.alpha}}},
           {"dim", gp.dim()},
           {"inputs", inputs},
           {"targets", targets},
           {"noise_var", gp.noise_var()},
           {"approx", gp.projected() ? "projected" : "subset"},
           {"beta_mode", beta_json(beta_mode)}};
  if (gp.projected()) out["inducing"] = gp.retained();
  return out;
}

GpPosterior load_checkpoint(const json& j) {
  KernelSpec k;
  k.kind = parse_kernel_kind(j.at("kernel").get<std::string>());
  k.lengthscales = j.at("hyperparams").at("lengthscales").get<std::vector<double>>();
  k.variance = j.at("hyperparams").at("variance").get<double>();
  k.alpha = j.at("hyperparams").at("alpha").get<double>();
  const auto dim = j.at("dim").get<std::size_t>();
  const double noise = j.at("noise_var").get<double>();
  const auto rows = j.at("inputs").get<std::vector<std::vector<double>>>();
  if (rows.empty()) return GpPosterior::prior(k, noise, dim);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != dim) throw FitError("checkpoint input row has the wrong width");
    for (std::size_t c = 0; c < dim; ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  const auto t = j.at("targets").get<std::vector<double>>();
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
  if (j.value("approx", std::string("subset")) == "projected")
    return fit_projected(k, std::move(x), y, noise, j.at("inducing").get<std::vector<std::size_t>>());
  return fit_exact(k, std::move(x), y, noise);
}

json to_json(const RunManifest& m) {
  json eps = json::array();
  for (const auto& e : m.episodes) eps.push_back(episode_json(e));
  return {{"schema_version", m.schema_version},
          {"config", serialize_config(m.config)},
          {"seed", m.seed},
          {"status", m.status},
          {"error", m.error},
          {"benchmark", {{"J_star", m.benchmark.j_star}, {"policy", m.benchmark.policy}, {"evals", m.benchmark.evals}}},
          {"J_analytic", m.j_analytic},
          {"episodes", eps},
          {"model_checkpoint", m.model_checkpoint}};
}

RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  m.schema_version = j.at("schema_version").get<int>();
  if (m.schema_version != RunManifest::kSchemaVersion)
    throw Error("unsupported manifest schema version " + std::to_string(m.schema_version));
  m.config = parse_config(j.at("config").get<std::string>());
  m.seed = j.at("seed").get<std::uint64_t>();
  m.status = j.at("status").get<std::string>();
  m.error = j.at("error").get<std::string>();
  const auto& b = j.at("benchmark");
  m.benchmark = {b.at("J_star").get<double>(), b.at("policy").get<std::vector<double>>(), b.at("evals").get<long>()};
  m.j_analytic = j.at("J_analytic").get<double>();
  for (const auto& e : j.at("episodes")) m.episodes.push_back(episode_from_json(e));
  m.model_checkpoint = j.at("model_checkpoint").get<std::string>();
  return m;
}

void write_episodes_csv(std::ostream& out, const RunManifest& m) {
  out << kEpisodesHeader << '\n' << std::setprecision(17);
  for (const auto& e : m.episodes)
    out << e.t << ',' << e.j_real << ',' << e.j_predicted << ',' << e.j_star << ',' << e.regret << ',' << e.sigma_sum
        << ',' << e.n_data << ',' << e.beta << ',' << e.wall_time_ms << '\n';
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << std::setw(2) << j << '\n';
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  return json::parse(in);
}

}  // namespace mfucrl
