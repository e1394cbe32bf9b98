#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "mfucrl/cem.hpp"
#include "mfucrl/error.hpp"
#include "mfucrl/policy_net.hpp"
#include "mfucrl/swarm.hpp"

using namespace mfucrl;

namespace {

// Plain loop reference for the tanh network.
double reference_mlp(const MlpLayout& l, const std::vector<double>& p, const std::vector<double>& x) {
  double out = p[static_cast<std::size_t>(l.inputs * l.hidden + 2 * l.hidden)];
  for (int j = 0; j < l.hidden; ++j) {
    double a = p[static_cast<std::size_t>(l.inputs * l.hidden + j)];
    for (int i = 0; i < l.inputs; ++i) a += p[static_cast<std::size_t>(j * l.inputs + i)] * x[static_cast<std::size_t>(i)];
    out += p[static_cast<std::size_t>(l.inputs * l.hidden + l.hidden + j)] * std::tanh(a);
  }
  return out;
}

std::vector<double> random_params(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::vector<double> p(n);
  for (auto& v : p) v = scale * n01(rng);
  return p;
}

}  // namespace

TEST_CASE("network layout") {
  CHECK(MlpLayout{3, 16}.size() == 3 * 16 + 33);
  const FeatureMode local = FeatureMode::parse("local");
  CHECK(NetworkPolicy::layout_for(local, 16).inputs == 3);
  CHECK(EtaNetwork::layout_for(local, 16).inputs == 4);
  CHECK(NetworkPolicy::layout_for(FeatureMode::parse("global(5)"), 8).inputs == 7);
  CHECK(NetworkPolicy::layout_for(FeatureMode::parse("none"), 4).size() == 2 * 4 + 9);
  CHECK_THROWS_AS(NetworkPolicy(local, 4, -7.0, 7.0, std::vector<double>(3, 0.0)), ConfigError);
  CHECK_THROWS_AS(NetworkPolicy(local, 4, 7.0, -7.0), ConfigError);
  CHECK_THROWS_AS(NetworkPolicy(local, 0, -7.0, 7.0), ConfigError);
}

TEST_CASE("squash matches tanh") {
  Eigen::ArrayXd x = Eigen::ArrayXd::LinSpaced(201, -30.0, 30.0);
  const Eigen::ArrayXd y = squash(x);
  for (Eigen::Index i = 0; i < x.size(); ++i) CHECK(y(i) == doctest::Approx(std::tanh(x(i))).epsilon(1e-12));
  CHECK(squash(Eigen::ArrayXd::Constant(1, 1e6))(0) == 1.0);
  CHECK(squash(Eigen::ArrayXd::Constant(1, -1e6))(0) == -1.0);
}

TEST_CASE("forward pass matches a loop reference") {
  const MlpLayout l{4, 5};
  const auto p = random_params(l.size(), 3);
  Eigen::MatrixXd x(6, 4);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = u(rng);
  const Eigen::VectorXd out = mlp_forward(l, p, x);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    std::vector<double> xr(4);
    for (int c = 0; c < 4; ++c) xr[static_cast<std::size_t>(c)] = x(r, c);
    CHECK(out(r) == doctest::Approx(reference_mlp(l, p, xr)).epsilon(1e-12));
  }
}

TEST_CASE("policy actions stay inside the interval") {
  const FeatureMode local = FeatureMode::parse("local");
  const auto layout = NetworkPolicy::layout_for(local, 8);
  const auto mu = make_initial("gaussian(0.3,0.05)", 100);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const NetworkPolicy pi(local, 8, -7.0, 7.0, random_params(layout.size(), seed, 50.0));
    const Eigen::VectorXd a = pi.actions_on_grid(mu);
    CHECK(a.minCoeff() >= -7.0);
    CHECK(a.maxCoeff() <= 7.0);
    const Eigen::VectorXd n = pi.normalized(a);
    CHECK(n.minCoeff() >= -1.0);
    CHECK(n.maxCoeff() <= 1.0);
    // Point evaluation agrees with the grid evaluation at nodes.
    for (int i = 0; i < 100; i += 13) CHECK(pi.action(mu.grid_point(i), mu) == doctest::Approx(a(i)).epsilon(1e-12));
    CHECK(pi.as_policy_fn()(0.37, mu) == pi.action(0.37, mu));
  }
  const NetworkPolicy zero(local, 8, -2.0, 6.0);
  CHECK(zero.action(0.1, mu) == doctest::Approx(2.0));
}

TEST_CASE("eta stays inside [-1, 1]") {
  const FeatureMode local = FeatureMode::parse("local");
  const auto layout = EtaNetwork::layout_for(local, 6);
  const EtaNetwork eta(local, 6, random_params(layout.size(), 9, 40.0));
  const auto mu = make_initial("ergodic", 50);
  const Eigen::MatrixXd f = grid_policy_features(mu, local);
  const Eigen::VectorXd e = eta.values(f, Eigen::VectorXd::LinSpaced(50, -1.0, 1.0));
  CHECK(e.minCoeff() >= -1.0);
  CHECK(e.maxCoeff() <= 1.0);
  CHECK(EtaNetwork(local, 6).values(f, Eigen::VectorXd::Zero(50)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("policy features") {
  const auto mu = make_initial("gaussian(0.5,0.1)", 20);
  const Eigen::MatrixXd f = grid_policy_features(mu, FeatureMode::parse("local"));
  REQUIRE(f.cols() == 3);
  for (int i = 0; i < 20; ++i) {
    CHECK(f(i, 0) == doctest::Approx(std::cos(2 * std::numbers::pi * i / 20.0)));
    CHECK(f(i, 1) == doctest::Approx(std::sin(2 * std::numbers::pi * i / 20.0)));
    CHECK(f(i, 2) == doctest::Approx(mu.height(i)));
  }
  const Eigen::MatrixXd p = point_policy_features(mu.grid_point(7), mu, FeatureMode::parse("local"));
  CHECK((p.row(0) - f.row(7)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("CEM finds the maximizer of a concave quadratic") {
  CemConfig c;
  c.population = 64;
  c.generations = 30;
  // Pure elite refits shrink the spread quickly; start wide enough to reach 3.
  c.init_std = 2.0;
  const std::size_t blocks[] = {1};
  const auto r = cem_maximize([](std::span<const double> x) { return -(x[0] - 3.0) * (x[0] - 3.0); }, blocks, c, 7);
  CHECK(std::abs(r.best[0] - 3.0) <= 0.01);
  CHECK(r.evals == 64L * 30L);
  REQUIRE(r.history.size() == 30);
  for (std::size_t g = 1; g < r.history.size(); ++g) CHECK(r.history[g] >= r.history[g - 1]);
  CHECK(r.best_score == r.history.back());
}

TEST_CASE("CEM in several dimensions") {
  CemConfig c;
  c.population = 100;
  c.generations = 60;
  c.init_std = 3.0;
  const std::size_t blocks[] = {3, 2};
  const std::vector<double> target{1.0, -2.0, 0.5, 0.0, 4.0};
  const auto r = cem_maximize(
      [&](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s -= (x[i] - target[i]) * (x[i] - target[i]);
        return s;
      },
      blocks, c, 2);
  for (std::size_t i = 0; i < target.size(); ++i) CHECK(std::abs(r.best[i] - target[i]) <= 0.05);
}

TEST_CASE("CEM candidate zero is the mean and injected candidates follow") {
  CemConfig c;
  c.population = 8;
  c.generations = 1;
  const std::size_t blocks[] = {2};
  const std::vector<double> mean{0.3, -0.4};
  const std::vector<std::vector<double>> inj{{5.0, 5.0}};
  std::vector<std::vector<double>> seen;
  cem_maximize(
      [&](std::span<const double> x) {
        seen.emplace_back(x.begin(), x.end());
        return 0.0;
      },
      blocks, c, 1, mean, inj);
  REQUIRE(seen.size() == 8);
  CHECK(seen[0] == mean);
  CHECK(seen[1] == inj[0]);

  // An injected optimum is never lost.
  const auto r = cem_maximize([](std::span<const double> x) { return -std::abs(x[0] - 5.0) - std::abs(x[1] - 5.0); },
                              blocks, c, 1, mean, inj);
  CHECK(r.best_score == 0.0);
}

TEST_CASE("CEM prefix blocks draw the same noise") {
  CemConfig c;
  c.population = 6;
  c.generations = 1;
  const std::size_t one[] = {3};
  const std::size_t two[] = {3, 4};
  std::vector<std::vector<double>> a, b;
  cem_maximize([&](std::span<const double> x) { a.emplace_back(x.begin(), x.end()); return 0.0; }, one, c, 11);
  cem_maximize([&](std::span<const double> x) { b.emplace_back(x.begin(), x.end()); return 0.0; }, two, c, 11);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k) CHECK(a[i][k] == b[i][k]);
}

TEST_CASE("CEM determinism and failures") {
  CemConfig c;
  c.population = 16;
  c.generations = 5;
  const std::size_t blocks[] = {4};
  const auto f = [](std::span<const double> x) { return -x[0] * x[0] + std::sin(x[1]) - std::abs(x[2] * x[3]); };
  const auto r1 = cem_maximize(f, blocks, c, 5), r2 = cem_maximize(f, blocks, c, 5), r3 = cem_maximize(f, blocks, c, 6);
  CHECK(r1.best == r2.best);
  CHECK(r1.history == r2.history);
  CHECK(r1.best != r3.best);

  CHECK_THROWS_AS(
      cem_maximize([](std::span<const double>) { return std::numeric_limits<double>::quiet_NaN(); }, blocks, c, 1),
      PlanningError);
  // Non-finite scores are skipped when others remain.
  const auto partial = cem_maximize(
      [](std::span<const double> x) { return x[0] > 0.0 ? std::numeric_limits<double>::infinity() * 0.0 : -x[0] * x[0]; },
      blocks, c, 1);
  CHECK(std::isfinite(partial.best_score));
  CHECK(partial.best[0] <= 0.0);

  CemConfig bad = c;
  bad.population = 1;
  CHECK_THROWS_AS(cem_maximize(f, blocks, bad, 1), ConfigError);
  bad = c;
  bad.elite_frac = 0.0;
  CHECK_THROWS_AS(cem_maximize(f, blocks, bad, 1), ConfigError);
  CHECK_THROWS_AS(cem_maximize(f, blocks, c, 1, std::vector<double>(3, 0.0)), PlanningError);
}
