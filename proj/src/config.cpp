#include "mfucrl/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mfucrl/error.hpp"

namespace mfucrl {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"env", {"dynamics", "M", "H", "dt", "a_min", "a_max", "initial", "noise_std"}},
      {"model",
       {"kernel", "lengthscales", "variance", "alpha", "noise_var", "subset_cap", "approx", "beta_mode", "beta",
        "beta_norm_bound", "beta_sub_gaussian", "beta_delta", "feat_mode"}},
      {"planner",
       {"population", "elite_frac", "generations", "init_std", "var_floor", "hidden_width", "feat_mode",
        "warm_start", "optimism_guard"}},
      {"loop", {"T", "K"}},
      {"validate", {"particles", "mc_particles", "policies", "pairs", "steps", "w1_tol", "stderr_mult", "periodic"}},
      {"run", {"seed", "out_dir"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(key, "expected a number, got \"" + raw + "\"");
  return out;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  Int out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError(key, "expected an integer, got \"" + raw + "\"");
  return out;
}

bool to_bool(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key, "expected true or false, got \"" + raw + "\"");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + fmt(values[i]);
  return out;
}

std::vector<double> split_numbers(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError(key, "expected a comma-separated list of numbers");
  return out;
}

void apply(RunConfig& c, const std::string& section, const std::string& name, const std::string& raw) {
  const std::string key = section + "." + name;
  const std::string v = trim(raw);
  if (section == "env") {
    if (name == "dynamics") c.env.dynamics = v;
    else if (name == "M") c.env.bins = to_int<int>(key, v);
    else if (name == "H") c.env.horizon = to_int<int>(key, v);
    else if (name == "dt") c.env.dt = to_double(key, v);
    else if (name == "a_min") c.env.a_min = to_double(key, v);
    else if (name == "a_max") c.env.a_max = to_double(key, v);
    else if (name == "initial") c.env.initial = v;
    else if (name == "noise_std") c.env.noise_std = to_double(key, v);
  } else if (section == "model") {
    if (name == "kernel") c.model.kernel.kind = parse_kernel_kind(v);
    else if (name == "lengthscales") c.model.kernel.lengthscales = split_numbers(key, v);
    else if (name == "variance") c.model.kernel.variance = to_double(key, v);
    else if (name == "alpha") c.model.kernel.alpha = to_double(key, v);
    else if (name == "noise_var") {
      if (v != "dt" && v != "pH") to_double(key, v);
      c.model.noise_var = v;
    } else if (name == "subset_cap") c.model.subset_cap = to_int<std::size_t>(key, v);
    else if (name == "approx") c.model.approx = parse_gp_approx(v);
    else if (name == "beta_mode") {
      if (v == "fixed") c.model.beta.kind = BetaMode::Kind::Fixed;
      else if (v == "theory") c.model.beta.kind = BetaMode::Kind::Theory;
      else throw ConfigError(key, "expected fixed or theory, got \"" + v + "\"");
    } else if (name == "beta") c.model.beta.value = to_double(key, v);
    else if (name == "beta_norm_bound") c.model.beta.norm_bound = to_double(key, v);
    else if (name == "beta_sub_gaussian") c.model.beta.sub_gaussian = to_double(key, v);
    else if (name == "beta_delta") c.model.beta.delta = to_double(key, v);
    else if (name == "feat_mode") {
      try {
        c.model.features = FeatureMode::parse(v);
      } catch (const ConfigError& e) {
        throw ConfigError(key, e.what());
      }
    }
  } else if (section == "planner") {
    if (name == "population") c.planner.cem.population = to_int<int>(key, v);
    else if (name == "elite_frac") c.planner.cem.elite_frac = to_double(key, v);
    else if (name == "generations") c.planner.cem.generations = to_int<int>(key, v);
    else if (name == "init_std") c.planner.cem.init_std = to_double(key, v);
    else if (name == "var_floor") c.planner.cem.var_floor = to_double(key, v);
    else if (name == "hidden_width") c.planner.hidden_width = to_int<int>(key, v);
    else if (name == "feat_mode") {
      try {
        c.planner.features = FeatureMode::parse(v);
      } catch (const ConfigError& e) {
        throw ConfigError(key, e.what());
      }
    } else if (name == "warm_start") c.planner.warm_start = to_bool(key, v);
    else if (name == "optimism_guard") c.planner.optimism_guard = to_bool(key, v);
  } else if (section == "loop") {
    if (name == "T") c.loop.episodes = to_int<int>(key, v);
    else if (name == "K") c.loop.particles = to_int<int>(key, v);
  } else if (section == "validate") {
    if (name == "particles") c.check.particles = to_int<std::size_t>(key, v);
    else if (name == "mc_particles") c.check.mc_particles = to_int<std::size_t>(key, v);
    else if (name == "policies") c.check.policies = to_int<int>(key, v);
    else if (name == "pairs") c.check.pairs = to_int<int>(key, v);
    else if (name == "steps") c.check.steps = to_int<int>(key, v);
    else if (name == "w1_tol") c.check.w1_tol = to_double(key, v);
    else if (name == "stderr_mult") c.check.stderr_mult = to_double(key, v);
    else if (name == "periodic") c.check.periodic = to_bool(key, v);
  } else if (section == "run") {
    if (name == "seed") c.seed = to_int<std::uint64_t>(key, v);
    else if (name == "out_dir") c.out_dir = v;
  }
}

}  // namespace

SwarmConfig RunConfig::swarm() const {
  SwarmConfig s;
  s.bins = env.bins;
  s.horizon = env.horizon;
  s.dt = env.dt.value_or(env.horizon > 0 ? 1.0 / env.horizon : 0.0);
  s.a_min = env.a_min;
  s.a_max = env.a_max;
  s.dynamics = parse_dynamics(env.dynamics);
  s.noise_std = env.noise_std.value_or(s.dt > 0.0 ? std::sqrt(s.dt) : 0.0);
  return s;
}

double RunConfig::noise_var() const {
  if (model.noise_var == "dt") return swarm().dt;
  if (model.noise_var == "pH") return static_cast<double>(env.horizon);
  return to_double("model.noise_var", model.noise_var);
}

void RunConfig::validate() const {
  const SwarmConfig s = swarm();
  s.validate();
  make_initial(env.initial, env.bins);
  model.kernel.validate(model_dim());
  if (!(noise_var() > 0.0)) throw ConfigError("model.noise_var", "must be positive");
  if (model.subset_cap < 1) throw ConfigError("model.subset_cap", "must be positive");
  model.beta.validate();
  if (model.features.kind == FeatureMode::Kind::Global && env.bins % model.features.pooled != 0)
    throw ConfigError("model.feat_mode", "pooled feature count must divide env.M");
  planner.validate();
  if (planner.features.kind == FeatureMode::Kind::Global && env.bins % planner.features.pooled != 0)
    throw ConfigError("planner.feat_mode", "pooled feature count must divide env.M");
  if (loop.episodes < 0) throw ConfigError("loop.T", "must be non-negative");
  if (loop.particles < 1) throw ConfigError("loop.K", "must be at least 1");
  if (check.particles < 1) throw ConfigError("validate.particles", "must be at least 1");
  if (check.mc_particles < 2) throw ConfigError("validate.mc_particles", "must be at least 2");
  if (check.policies < 0) throw ConfigError("validate.policies", "must be non-negative");
  if (check.pairs < 0) throw ConfigError("validate.pairs", "must be non-negative");
  if (check.steps < 0) throw ConfigError("validate.steps", "must be non-negative");
  if (!(check.w1_tol > 0.0)) throw ConfigError("validate.w1_tol", "must be positive");
  if (!(check.stderr_mult > 0.0)) throw ConfigError("validate.stderr_mult", "must be positive");
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    const std::string key = trim(ov.substr(0, eq));
    if (eq == std::string::npos || key.find('.') == std::string::npos)
      throw ConfigError(key, "override must look like section.key=value");
    tree.put(pt::ptree::path_type(key, '.'), trim(ov.substr(eq + 1)));
  }

  RunConfig c;
  for (const auto& [section, body] : tree) {
    const auto known = schema().find(section);
    if (known == schema().end()) {
      if (body.empty()) throw ConfigError(section, "top-level keys are not allowed; use a section");
      throw ConfigError(section, "unknown section");
    }
    for (const auto& [name, value] : body) {
      if (!known->second.count(name)) throw ConfigError(section + "." + name, "unknown key");
      apply(c, section, name, value.data());
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read config file \"" + path + "\"");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides);
}

std::string serialize_config(const RunConfig& c) {
  pt::ptree tree;
  auto put = [&](const std::string& key, const std::string& value) { tree.put(pt::ptree::path_type(key, '.'), value); };
  put("env.dynamics", c.env.dynamics);
  put("env.M", std::to_string(c.env.bins));
  put("env.H", std::to_string(c.env.horizon));
  if (c.env.dt) put("env.dt", fmt(*c.env.dt));
  put("env.a_min", fmt(c.env.a_min));
  put("env.a_max", fmt(c.env.a_max));
  put("env.initial", c.env.initial);
  if (c.env.noise_std) put("env.noise_std", fmt(*c.env.noise_std));

  put("model.kernel", to_string(c.model.kernel.kind));
  put("model.lengthscales", join(c.model.kernel.lengthscales));
  put("model.variance", fmt(c.model.kernel.variance));
  put("model.alpha", fmt(c.model.kernel.alpha));
  put("model.noise_var", c.model.noise_var);
  put("model.subset_cap", std::to_string(c.model.subset_cap));
  put("model.approx", to_string(c.model.approx));
  put("model.beta_mode", c.model.beta.kind == BetaMode::Kind::Fixed ? "fixed" : "theory");
  put("model.beta", fmt(c.model.beta.value));
  put("model.beta_norm_bound", fmt(c.model.beta.norm_bound));
  put("model.beta_sub_gaussian", fmt(c.model.beta.sub_gaussian));
  put("model.beta_delta", fmt(c.model.beta.delta));
  put("model.feat_mode", c.model.features.to_string());

  put("planner.population", std::to_string(c.planner.cem.population));
  put("planner.elite_frac", fmt(c.planner.cem.elite_frac));
  put("planner.generations", std::to_string(c.planner.cem.generations));
  put("planner.init_std", fmt(c.planner.cem.init_std));
  put("planner.var_floor", fmt(c.planner.cem.var_floor));
  put("planner.hidden_width", std::to_string(c.planner.hidden_width));
  put("planner.feat_mode", c.planner.features.to_string());
  put("planner.warm_start", c.planner.warm_start ? "true" : "false");
  put("planner.optimism_guard", c.planner.optimism_guard ? "true" : "false");

  put("loop.T", std::to_string(c.loop.episodes));
  put("loop.K", std::to_string(c.loop.particles));
  put("validate.particles", std::to_string(c.check.particles));
  put("validate.mc_particles", std::to_string(c.check.mc_particles));
  put("validate.policies", std::to_string(c.check.policies));
  put("validate.pairs", std::to_string(c.check.pairs));
  put("validate.steps", std::to_string(c.check.steps));
  put("validate.w1_tol", fmt(c.check.w1_tol));
  put("validate.stderr_mult", fmt(c.check.stderr_mult));
  put("validate.periodic", c.check.periodic ? "true" : "false");
  put("run.seed", std::to_string(c.seed));
  if (!c.out_dir.empty()) put("run.out_dir", c.out_dir);

  std::ostringstream out;
  pt::write_ini(out, tree);
  return out.str();
}

RunConfig desk_config() {
  RunConfig c;
  c.env.bins = 100;
  c.env.horizon = 50;
  c.env.dt = 1.0 / 50.0;
  c.loop.episodes = 15;
  return c;
}

}  // namespace mfucrl
