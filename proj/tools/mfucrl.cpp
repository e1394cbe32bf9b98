// mfucrl: run, benchmark, validate and export mean-field UCRL experiments.
//
// Exit codes: 0 success, 1 runtime failure (or failed validation), 2 bad
// configuration, usage or missing artifacts.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mfucrl/config.hpp"
#include "mfucrl/driver.hpp"
#include "mfucrl/error.hpp"
#include "mfucrl/oracles.hpp"
#include "mfucrl/run_io.hpp"
#include "mfucrl/seeds.hpp"

namespace fs = std::filesystem;
using namespace mfucrl;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::vector<std::string> overrides;
  std::string what;
  std::string run_dir;
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) throw ConfigError("--seeds", "expected a..b, got \"" + text + "\"");
  try {
    std::size_t used = 0;
    const std::string lo_s = text.substr(0, dots), hi_s = text.substr(dots + 2);
    const auto lo = std::stoull(lo_s, &used);
    if (used != lo_s.size()) throw std::invalid_argument(lo_s);
    const auto hi = std::stoull(hi_s, &used);
    if (used != hi_s.size()) throw std::invalid_argument(hi_s);
    if (hi < lo) throw ConfigError("--seeds", "upper seed below lower seed");
    std::vector<std::uint64_t> out;
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  } catch (const std::logic_error&) {
    throw ConfigError("--seeds", "expected a..b, got \"" + text + "\"");
  }
}

/// --out, then run.out_dir, then $MFUCRL_OUT.
std::string resolve_out(const Options& o, const RunConfig& c) {
  if (!o.out.empty()) return o.out;
  if (!c.out_dir.empty()) return c.out_dir;
  if (const char* env = std::getenv("MFUCRL_OUT"); env && *env) return env;
  return {};
}

std::vector<std::uint64_t> seed_list(const Options& o, const RunConfig& c) {
  if (!o.seeds.empty()) {
    if (o.seed) throw ConfigError("--seeds", "cannot be combined with --seed");
    return parse_seeds(o.seeds);
  }
  return {o.seed.value_or(c.seed)};
}

void print_episode(const EpisodeRecord& r) {
  std::printf("episode %3d  J_real %10.4f  J_pred %10.4f  regret %10.4f  sigma_sum %.5f  n %zu  %ld ms\n", r.t,
              r.j_real, r.j_predicted, r.regret, r.sigma_sum, r.n_data, r.wall_time_ms);
  std::fflush(stdout);
}

int cmd_run(const Options& o) {
  const RunConfig base = load_config(o.config, o.overrides);
  const std::string out = resolve_out(o, base);
  if (out.empty()) throw ConfigError("run.out_dir", "no output directory: pass --out, set run.out_dir or MFUCRL_OUT");
  const auto seeds = seed_list(o, base);
  for (const auto seed : seeds) {
    RunConfig c = base;
    c.seed = seed;
    c.out_dir = seeds.size() > 1 ? (fs::path(out) / ("seed_" + std::to_string(seed))).string() : out;
    std::printf("run seed %llu -> %s\n", static_cast<unsigned long long>(seed), c.out_dir.c_str());
    const RunManifest m = run_experiment(c, seed, print_episode);
    std::printf("J_star %.6f  J_analytic %.6f\n", m.benchmark.j_star, m.j_analytic);
    if (m.episodes.size() >= 2) {
      const RegretSummary s = regret_summary(m);
      std::printf("regret: cumulative %.4f  first-%d mean %.4f  last-%d mean %.4f\n", s.cumulative, s.window,
                  s.first_mean, s.window, s.last_mean);
      if (s.optimism_warning)
        std::fprintf(stderr, "warning: J_predicted >= J_real in only %.0f%% of episodes\n", 100.0 * s.optimism_fraction);
    }
  }
  return 0;
}

int cmd_benchmark(const Options& o) {
  const RunConfig base = load_config(o.config, o.overrides);
  const std::string out = resolve_out(o, base);
  const auto seeds = seed_list(o, base);
  for (const auto seed : seeds) {
    RunConfig c = base;
    c.seed = seed;
    RunState state(c, seed);
    run_benchmark(state);
    const auto& b = state.manifest.benchmark;
    nlohmann::json j{{"seed", seed},
                     {"J_star", b.j_star},
                     {"J_analytic", state.manifest.j_analytic},
                     {"evals", b.evals},
                     {"hidden_width", c.planner.hidden_width},
                     {"feat_mode", c.planner.features.to_string()},
                     {"policy", b.policy}};
    std::printf("seed %llu  J_star %.6f  J_analytic %.6f\n", static_cast<unsigned long long>(seed), b.j_star,
                state.manifest.j_analytic);
    if (!out.empty()) {
      const fs::path dir = seeds.size() > 1 ? fs::path(out) / ("seed_" + std::to_string(seed)) : fs::path(out);
      fs::create_directories(dir);
      write_json_file((dir / "benchmark.json").string(), j);
    }
  }
  return 0;
}

int cmd_validate(const Options& o) {
  const RunConfig c = load_config(o.config, o.overrides);
  const std::uint64_t seed = o.seed.value_or(c.seed);
  const ValidationReport rep = run_validation(c, seed);
  const auto& chk = c.check;

  std::printf("flow vs %zu particles (tolerance %.4g)\n", chk.particles, chk.w1_tol);
  for (const auto& r : rep.flow) std::printf("  policy %d  max W1 %.6f  %s\n", r.policy, r.max_w1, r.pass ? "ok" : "FAIL");
  std::printf("integrated reward vs %zu-agent Monte Carlo (tolerance %.4g stderr)\n", chk.mc_particles,
              chk.stderr_mult);
  for (const auto& r : rep.reward)
    std::printf("  pair %d  J %.6f  MC %.6f  stderr %.6f  |delta|/stderr %.3f  %s\n", r.pair, r.j_flow, r.j_mc,
                r.std_error, std::abs(r.j_flow - r.j_mc) / r.std_error, r.pass ? "ok" : "FAIL");

  if (rep.pass()) {
    std::printf("validate: pass\n");
    return 0;
  }
  std::printf("offending steps\nkind,index,h,W1\n");
  for (const auto& r : rep.flow) {
    if (r.pass) continue;
    for (std::size_t h = 0; h < r.w1.size(); ++h)
      if (r.w1[h] > chk.w1_tol) std::printf("flow,%d,%zu,%.6f\n", r.policy, h, r.w1[h]);
  }
  for (const auto& r : rep.reward)
    if (!r.pass) std::printf("reward,%d,%d,%.6f\n", r.pair, c.env.horizon, std::abs(r.j_flow - r.j_mc));
  std::printf("validate: FAIL\n");
  return 1;
}

RunManifest load_manifest(const std::string& dir) {
  const fs::path path = fs::path(dir) / "manifest.json";
  if (!fs::exists(path)) throw ConfigError("run_dir", "no manifest.json in \"" + dir + "\"");
  return manifest_from_json(read_json_file(path.string()));
}

void export_rewards(std::ostream& out, const RunManifest& m) {
  out << "t,J_real,J_predicted,J_star,J_analytic\n";
  char line[256];
  for (const auto& e : m.episodes) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g\n", e.t, e.j_real, e.j_predicted, e.j_star,
                  m.j_analytic);
    out << line;
  }
}

GridTrace final_trace(const RunManifest& m) {
  const SwarmConfig env = m.config.swarm();
  const NetworkPolicy policy = stored_policy(m, static_cast<int>(m.episodes.size()));
  GridTrace trace;
  known_objective(make_drift(env), policy, make_initial(m.config.env.initial, env.bins), env, &trace);
  return trace;
}

void export_policy(std::ostream& out, const RunManifest& m) {
  const NetworkPolicy policy = stored_policy(m, static_cast<int>(m.episodes.size()));
  const GridDistribution& mu_final = final_trace(m).flow.back();
  const Eigen::VectorXd pi = policy.actions_on_grid(mu_final);
  out << "s,pi,pi_star_C\n";
  char line[128];
  for (int i = 0; i < mu_final.size(); ++i) {
    const double s = mu_final.grid_point(i);
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", s, pi(i), analytic_policy(s));
    out << line;
  }
}

void export_flow(std::ostream& out, const RunManifest& m) {
  const auto flow = final_trace(m).flow;
  const int horizon = static_cast<int>(flow.size()) - 1;
  const std::set<int> steps{0, std::min(16, horizon), horizon};
  const int bins = flow.front().size();
  out << "h";
  for (int i = 1; i <= bins; ++i) out << ",m_" << i;
  out << '\n';
  char cell[32];
  for (int h : steps) {
    out << h;
    for (int i = 0; i < bins; ++i) {
      std::snprintf(cell, sizeof cell, ",%.17g", flow[static_cast<std::size_t>(h)].height(i));
      out << cell;
    }
    out << '\n';
  }
}

int cmd_export(const Options& o) {
  const RunManifest m = load_manifest(o.run_dir);
  std::ostringstream buf;
  if (o.what == "rewards") export_rewards(buf, m);
  else if (o.what == "policy") export_policy(buf, m);
  else if (o.what == "flow") export_flow(buf, m);
  else throw ConfigError("what", "expected rewards, flow or policy");

  std::string out = o.out;
  if (out.empty())
    if (const char* env = std::getenv("MFUCRL_OUT"); env && *env) out = env;
  if (out.empty()) {
    std::cout << buf.str();
    return 0;
  }
  fs::create_directories(out);
  std::ofstream file(fs::path(out) / (o.what + ".csv"));
  file << buf.str();
  if (!file) throw Error("cannot write " + (fs::path(out) / (o.what + ".csv")).string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-based mean-field control with optimistic exploration on the swarm benchmark."};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub, bool sweep) {
    sub->add_option("--config", o.config, "INI configuration file")->required();
    sub->add_option("--out", o.out, "Output directory (falls back to run.out_dir, then $MFUCRL_OUT)");
    sub->add_option("--seed", o.seed, "Master seed (overrides run.seed)");
    if (sweep) sub->add_option("--seeds", o.seeds, "Seed sweep a..b; one subdirectory per seed");
    sub->add_option("--override", o.overrides, "section.key=value, repeatable")->allow_extra_args(false);
  };
  auto* run = app.add_subcommand("run", "Benchmark plus T learning episodes");
  common(run, true);
  auto* bench = app.add_subcommand("benchmark", "Known-dynamics benchmark only; writes benchmark.json");
  common(bench, true);
  auto* val = app.add_subcommand("validate", "Flow and reward oracle checks");
  common(val, false);
  auto* exp = app.add_subcommand("export", "Plot-ready CSV from a run directory");
  exp->add_option("what", o.what, "rewards, flow or policy")->required()->check(CLI::IsMember({"rewards", "flow", "policy"}));
  exp->add_option("run_dir", o.run_dir, "Run directory holding manifest.json")->required();
  exp->add_option("--out", o.out, "Directory for <what>.csv (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(o);
    if (*bench) return cmd_benchmark(o);
    if (*val) return cmd_validate(o);
    return cmd_export(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
