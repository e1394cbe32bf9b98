// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance            all criteria
//   acceptance 7 12       selected criteria only
//
// Learning runs are written under MFUCRL_ACCEPTANCE_DIR for inspection.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mfucrl/config.hpp"
#include "mfucrl/driver.hpp"
#include "mfucrl/flow.hpp"
#include "mfucrl/gp.hpp"
#include "mfucrl/oracles.hpp"
#include "mfucrl/planner.hpp"
#include "mfucrl/run_io.hpp"
#include "mfucrl/seeds.hpp"
#include "mfucrl/swarm.hpp"
#include "oracles_test_support.hpp"

using namespace mfucrl;
namespace fs = std::filesystem;

namespace {

const std::string kSource = MFUCRL_SOURCE_DIR;
const fs::path kRuns = fs::path(MFUCRL_ACCEPTANCE_DIR) / "acceptance_runs";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

RunConfig desk() { return load_config(kSource + "/configs/desk.ini"); }

// ---------------------------------------------------------------- 1

Outcome flow_mass() {
  FlowOptions raw;
  raw.renormalize = false;
  const double sd = std::sqrt(1.0 / 200);
  const DriftFn basic{[](double s, double a, const GridDistribution&) { return s + a / 200.0; }, sd};
  double worst_raw = 0.0, worst_norm = 0.0;
  for (int m : {100, 200}) {
    for (const auto& mu : {GridDistribution::uniform(m), GridDistribution::point_mass(m, 7), make_initial("ergodic", m),
                           make_initial("gaussian(0.9,0.03)", m)}) {
      for (std::uint64_t k = 0; k < 4; ++k) {
        const PolicyFn pi = k == 0 ? constant_policy(7.0) : random_lipschitz_policy(k, -7.0, 7.0);
        worst_raw = std::max(worst_raw, std::abs(flow_step(mu, pi, basic, raw).mass() - 1.0));
        worst_norm = std::max(worst_norm, std::abs(flow_step(mu, pi, basic).mass() - 1.0));
      }
    }
  }
  return {worst_raw <= 1e-3 && worst_norm <= 1e-12,
          "max |raw mass - 1| = " + fmt("%.2e", worst_raw) + ", after renormalization " + fmt("%.1e", worst_norm)};
}

// ---------------------------------------------------------------- 2, 3, 11

Outcome flow_oracle(const RunConfig& cfg) {
  const auto report = run_validation(cfg, cfg.seed);
  double worst = 0.0;
  bool ok = report.flow.size() == 3;
  for (const auto& r : report.flow) {
    worst = std::max(worst, r.max_w1);
    ok = ok && r.pass && r.w1.size() == 21;
  }
  return {ok && worst <= 0.02, std::to_string(report.flow.size()) + " policies, max_h<=20 W1 = " + fmt("%.4f", worst) +
                                   " (limit 0.02, " + std::to_string(cfg.check.particles) + " particles)"};
}

Outcome reward_oracle(const RunConfig& cfg) {
  const auto report = run_validation(cfg, cfg.seed);
  double worst_z = 0.0;
  bool ok = report.reward.size() == 5;
  for (const auto& r : report.reward) {
    worst_z = std::max(worst_z, std::abs(r.j_flow - r.j_mc) / r.std_error);
    ok = ok && r.pass;
  }
  return {ok && worst_z <= 3.0, std::to_string(report.reward.size()) + " pairs at H=" + std::to_string(cfg.env.horizon) +
                                    ", max |J - J_MC| / stderr = " + fmt("%.2f", worst_z)};
}

// ---------------------------------------------------------------- 4

Outcome ergodic() {
  const auto sol = analytic_solution(200);
  const double dt = 1.0 / 200;
  const DriftFn basic{[dt](double s, double a, const GridDistribution&) { return s + a * dt; }, std::sqrt(dt)};
  const double w = wasserstein1_circle(flow_step(sol.distribution, sol.policy, basic), sol.distribution);
  return {w <= 0.02, "W1(Phi(mu*, pi*), mu*) = " + fmt("%.6f", w)};
}

// ---------------------------------------------------------------- 5

Outcome w1_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(2, 12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int m = size(rng);
    std::vector<double> a(static_cast<std::size_t>(m)), b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = u(rng) < 0.2 ? 0.0 : u(rng);
      b[i] = u(rng) < 0.2 ? 0.0 : u(rng);
    }
    a[0] += 0.05;
    b[static_cast<std::size_t>(m - 1)] += 0.05;
    const auto da = GridDistribution::from_heights(a), db = GridDistribution::from_heights(b);
    std::vector<double> ma, mb;
    for (int i = 0; i < m; ++i) {
      ma.push_back(da.height(i) / m);
      mb.push_back(db.height(i) / m);
    }
    worst = std::max(worst, std::abs(wasserstein1_circle(da, db) - testing_oracles::transport_lp(ma, mb)));
  }
  return {worst <= 1e-8, "50 pairs, max |W1 - LP| = " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- 6

Outcome gp_correctness() {
  KernelSpec se;
  Eigen::MatrixXd x1(1, 3);
  x1 << 0.2, 0.4, -1.0;
  const auto one = fit(se, x1, Eigen::VectorXd::Ones(1), 0.25, 16);
  const auto p1 = one.predict(std::vector<double>{0.2, 0.4, -1.0});
  const double e_one = std::max(std::abs(p1.mean - 0.8), std::abs(p1.std * p1.std - 0.2));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> us(0.0, 1.0), ua(-7.0, 7.0);
  Eigen::MatrixXd x(50, 3);
  Eigen::VectorXd y(50);
  for (int r = 0; r < 50; ++r) {
    const double s = us(rng), a = ua(rng);
    x.row(r) << std::cos(2 * std::numbers::pi * s), std::sin(2 * std::numbers::pi * s), a;
    y(r) = wrap_signed(a / 200.0);
  }
  KernelSpec k;
  k.lengthscales = {1.0, 1.0, 5.0};
  const auto gp = fit(k, x, y, 1e-8, 128);
  Eigen::VectorXd mean, sd;
  gp.predict_batch(x, mean, sd);
  const double e_mean = (mean - y).cwiseAbs().maxCoeff(), e_std = sd.maxCoeff();

  double rise = 0.0;
  for (int n = 1; n < 40; ++n) {
    const Eigen::MatrixXd q = Eigen::MatrixXd::Random(20, 3) * 2.0;
    Eigen::VectorXd m0, s0, m1, s1;
    fit_exact(k, x.topRows(n), y.head(n), 0.01).predict_batch(q, m0, s0);
    fit_exact(k, x.topRows(n + 1), y.head(n + 1), 0.01).predict_batch(q, m1, s1);
    rise = std::max(rise, (s1.array().square() - s0.array().square()).maxCoeff());
  }
  const bool ok = e_one <= 1e-12 && e_mean <= 1e-5 && e_std <= 1e-3 && rise <= 1e-8;
  return {ok, "one-point error " + fmt("%.1e", e_one) + ", interpolation mean error " + fmt("%.1e", e_mean) +
                  ", train std " + fmt("%.1e", e_std) + ", max variance increase " + fmt("%.1e", rise)};
}

// ---------------------------------------------------------------- 7

// n transitions of the basic dynamics with true noise, inputs spread over the
// torus, the action interval and a range of densities.
struct Sample {
  Eigen::MatrixXd x;
  Eigen::VectorXd y, f;
};

Sample basic_sample(const RunConfig& cfg, int n, std::uint64_t seed, bool on_grid) {
  const SwarmConfig env = cfg.swarm();
  const DriftFn truth = make_drift(env);
  Sample out{Eigen::MatrixXd(n, 4), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int r = 0; r < n; ++r) {
    const std::uint64_t key = derive_seed(seed, {static_cast<std::uint64_t>(r)});
    const auto mu = random_start(derive_seed(key, {0}), env.bins);
    const double s = on_grid ? static_cast<int>(key_uniform(derive_seed(key, {1})) * env.bins) / double(env.bins)
                             : key_uniform(derive_seed(key, {1}));
    const double a = env.a_min + (env.a_max - env.a_min) * key_uniform(derive_seed(key, {2}));
    const auto z = make_joint_input(s, a, mu, cfg.model.features).flatten();
    for (int c = 0; c < 4; ++c) out.x(r, c) = z[static_cast<std::size_t>(c)];
    const double mean_next = truth.mean(s, a, mu);
    out.f(r) = wrap_signed(mean_next - s);
    out.y(r) = wrap_signed(mean_next + env.noise_std * key_normal(derive_seed(key, {3})) - s);
  }
  return out;
}

Outcome calibration() {
  const RunConfig cfg = desk();
  int good = 0;
  double lowest = 1.0;
  std::ostringstream cov;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto train = basic_sample(cfg, 200, derive_seed(seed, {7, 0}), false);
    const auto test = basic_sample(cfg, 500, derive_seed(seed, {7, 1}), true);
    const auto gp = fit(cfg.model.kernel, train.x, train.y, cfg.noise_var(), cfg.model.subset_cap, cfg.model.approx);
    Eigen::VectorXd mean, sd;
    gp.predict_batch(test.x, mean, sd);
    const double covered = ((test.f - mean).cwiseAbs().array() <= 2.0 * sd.array()).cast<double>().mean();
    lowest = std::min(lowest, covered);
    good += covered >= 0.95;
    cov << (seed > 1 ? " " : "") << fmt("%.3f", covered);
  }
  return {good >= 18, std::to_string(good) + "/20 seeds with coverage >= 0.95 at beta 2 (lowest " + fmt("%.3f", lowest) +
                          "); per seed: " + cov.str()};
}

// ---------------------------------------------------------------- 8, 9, 10

struct LearningRun {
  RunManifest manifest;
  double cpu_seconds = 0.0;
};

std::vector<LearningRun>& desk_runs() {
  static std::vector<LearningRun> runs;
  if (!runs.empty()) return runs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RunConfig cfg = desk();
    cfg.out_dir = (kRuns / "desk" / ("seed_" + std::to_string(seed))).string();
    const std::clock_t c0 = std::clock();
    LearningRun r;
    r.manifest = run_experiment(cfg, seed, [seed](const EpisodeRecord& e) {
      std::printf("  desk seed %llu episode %2d: J_real %9.3f  J_star %9.3f  sigma_sum %.4f\n",
                  static_cast<unsigned long long>(seed), e.t, e.j_real, e.j_star, e.sigma_sum);
      std::fflush(stdout);
    });
    r.cpu_seconds = static_cast<double>(std::clock() - c0) / CLOCKS_PER_SEC;
    runs.push_back(std::move(r));
  }
  return runs;
}

double mean_over(const std::vector<EpisodeRecord>& eps, int first, int last, double EpisodeRecord::*field) {
  double s = 0.0;
  for (int t = first; t <= last; ++t) s += eps[static_cast<std::size_t>(t - 1)].*field;
  return s / (last - first + 1);
}

Outcome convergence() {
  int good = 0;
  double worst_cpu = 0.0;
  std::ostringstream per;
  for (const auto& r : desk_runs()) {
    const double j_star = r.manifest.benchmark.j_star;
    const double late = mean_over(r.manifest.episodes, 13, 15, &EpisodeRecord::j_real);
    const bool ok = late >= j_star - 0.05 * std::abs(j_star);
    good += ok;
    worst_cpu = std::max(worst_cpu, r.cpu_seconds);
    per << " seed " << r.manifest.seed << ": " << fmt("%.2f", late) << " vs J* " << fmt("%.2f", j_star)
        << (ok ? " ok;" : " short;");
  }
  return {good >= 3 && worst_cpu <= 900.0, std::to_string(good) + "/5 seeds within 5% of |J*| over episodes 13-15;" +
                                               per.str() + " max CPU per seed " + fmt("%.0f", worst_cpu) + " s"};
}

Outcome regret_trend() {
  int good = 0;
  std::ostringstream per;
  for (const auto& r : desk_runs()) {
    const double early = mean_over(r.manifest.episodes, 1, 5, &EpisodeRecord::regret);
    const double late = mean_over(r.manifest.episodes, 11, 15, &EpisodeRecord::regret);
    good += late < early;
    per << " " << fmt("%.1f", early) << " -> " << fmt("%.1f", late) << ";";
  }
  return {good >= 3, std::to_string(good) + "/5 seeds with lower mean regret in episodes 11-15 than 1-5;" + per.str()};
}

Outcome contraction() {
  std::vector<double> ratios;
  for (const auto& r : desk_runs())
    ratios.push_back(r.manifest.episodes.at(14).sigma_sum / r.manifest.episodes.at(0).sigma_sum);
  std::sort(ratios.begin(), ratios.end());
  const double median = ratios[2];
  std::ostringstream per;
  for (double v : ratios) per << " " << fmt("%.4f", v);
  return {median <= 0.5, "median sigma_sum(15) / sigma_sum(1) = " + fmt("%.4f", median) + " (sorted:" + per.str() + ")"};
}

// ---------------------------------------------------------------- 11

Outcome congestion() {
  RunConfig cfg = load_config(kSource + "/configs/desk_congestion.ini");
  const Outcome flow = flow_oracle(cfg), reward = reward_oracle(cfg);
  cfg.out_dir = (kRuns / "congestion").string();
  const auto t0 = std::chrono::steady_clock::now();
  const auto m = run_experiment(cfg, cfg.seed, [](const EpisodeRecord& e) {
    std::printf("  congestion episode %2d: J_real %9.3f  J_star %9.3f\n", e.t, e.j_real, e.j_star);
    std::fflush(stdout);
  });
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  bool finite = m.episodes.size() == 10 && std::isfinite(m.benchmark.j_star);
  for (const auto& e : m.episodes)
    finite = finite && std::isfinite(e.j_real) && std::isfinite(e.j_predicted) && std::isfinite(e.sigma_sum) &&
             std::isfinite(e.w1_sum);
  return {flow.pass && reward.pass && finite && minutes <= 20.0,
          "flow: " + flow.detail + "; reward: " + reward.detail + "; 10-episode run " +
              (finite ? "finite" : "NOT finite") + " in " + fmt("%.1f", minutes) + " min"};
}

// ---------------------------------------------------------------- 12

Outcome robust_start() {
  const RunConfig cfg = desk();
  const SwarmConfig env = cfg.swarm();
  const DriftFn truth = make_drift(env);
  const auto erg = make_initial("ergodic", env.bins);
  const auto bench = plan_known_dynamics(truth, erg, env, cfg.planner, derive_seed(cfg.seed, {stream::kBenchmark}));
  const auto policy = make_policy(env, cfg.planner, bench.policy);
  GridTrace ref;
  known_objective(truth, policy, erg, env, &ref);
  double worst = 0.0;
  std::ostringstream per;
  for (const char* start : {"uniform", "gaussian(0.5,0.04)"}) {
    GridTrace tr;
    known_objective(truth, policy, make_initial(start, env.bins), env, &tr);
    const double w = wasserstein1_circle(tr.flow.back(), ref.flow.back());
    worst = std::max(worst, w);
    per << " " << start << " " << fmt("%.4f", w) << ";";
  }
  return {worst <= 0.05, "W1(mu_H, mu_H from ergodic start) at H=" + std::to_string(env.horizon) + ":" + per.str()};
}

// ---------------------------------------------------------------- 13

// Largest numeric difference between two JSON documents; structural
// differences count as infinite. Wall-clock fields are ignored.
double json_gap(const nlohmann::json& a, const nlohmann::json& b) {
  if (a.is_number() && b.is_number()) return std::abs(a.get<double>() - b.get<double>());
  if (a.type() != b.type() || a.size() != b.size()) return INFINITY;
  double gap = 0.0;
  if (a.is_object()) {
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (it.key() == "wall_time_ms") continue;
      if (!b.contains(it.key())) return INFINITY;
      gap = std::max(gap, json_gap(it.value(), b.at(it.key())));
    }
  } else if (a.is_array()) {
    for (std::size_t i = 0; i < a.size(); ++i) gap = std::max(gap, json_gap(a[i], b[i]));
  } else if (a != b) {
    return INFINITY;
  }
  return gap;
}

nlohmann::json csv_json(const fs::path& p, bool drop_last_column) {
  std::ifstream in(p);
  nlohmann::json rows = nlohmann::json::array();
  for (std::string line; std::getline(in, line);) {
    nlohmann::json row = nlohmann::json::array();
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) {
      try {
        row.push_back(std::stod(f));
      } catch (const std::exception&) {
        row.push_back(f);
      }
    }
    if (drop_last_column && !row.empty()) row.erase(row.size() - 1);
    rows.push_back(row);
  }
  return rows;
}

Outcome determinism() {
  RunConfig cfg = desk();
  cfg.planner.cem.population = 32;
  cfg.planner.cem.generations = 5;
  cfg.loop.episodes = 3;
  double gap = 0.0;
  for (int rep = 0; rep < 2; ++rep) fs::remove_all(kRuns / ("repeat_" + std::to_string(rep)));
  for (int rep = 0; rep < 2; ++rep) {
    cfg.out_dir = (kRuns / ("repeat_" + std::to_string(rep))).string();
    run_experiment(cfg, 9);
  }
  const fs::path a = kRuns / "repeat_0", b = kRuns / "repeat_1";
  for (const char* f : {"manifest.json", "model_final.json", "policy_final.json"}) {
    auto ja = read_json_file((a / f).string()), jb = read_json_file((b / f).string());
    if (std::string(f) == "manifest.json") {
      // The two runs differ only in where they were written.
      for (auto* j : {&ja, &jb}) {
        RunConfig c = parse_config((*j)["config"].get<std::string>());
        c.out_dir.clear();
        (*j)["config"] = serialize_config(c);
      }
    }
    gap = std::max(gap, json_gap(ja, jb));
  }
  gap = std::max(gap, json_gap(csv_json(a / "episodes.csv", true), csv_json(b / "episodes.csv", true)));
  gap = std::max(gap, json_gap(csv_json(a / "flow_final.csv", false), csv_json(b / "flow_final.csv", false)));

  const auto v1 = run_validation(desk(), 3), v2 = run_validation(desk(), 3);
  for (std::size_t i = 0; i < v1.flow.size(); ++i)
    for (std::size_t h = 0; h < v1.flow[i].w1.size(); ++h) gap = std::max(gap, std::abs(v1.flow[i].w1[h] - v2.flow[i].w1[h]));
  for (std::size_t i = 0; i < v1.reward.size(); ++i) {
    gap = std::max(gap, std::abs(v1.reward[i].j_mc - v2.reward[i].j_mc));
    gap = std::max(gap, std::abs(v1.reward[i].std_error - v2.reward[i].std_error));
  }
  return {gap <= 1e-9, "repeated run (3 episodes) and validate: max numeric difference " + fmt("%.1e", gap)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<Criterion> criteria{
      {1, "flow mass", flow_mass},
      {2, "flow vs particles", [] { return flow_oracle(desk()); }},
      {3, "integrated reward vs Monte Carlo", [] { return reward_oracle(desk()); }},
      {4, "ergodic solution", ergodic},
      {5, "circular W1 vs transport LP", w1_oracle},
      {6, "GP correctness", gp_correctness},
      {7, "calibration coverage", calibration},
      {8, "learning convergence", convergence},
      {9, "regret trend", regret_trend},
      {10, "uncertainty contraction", contraction},
      {11, "congestion variant", congestion},
      {12, "robust initialization", robust_start},
      {13, "determinism", determinism},
  };

  fs::create_directories(kRuns);
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s criterion %2d  %-34s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
