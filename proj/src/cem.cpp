#include "mfucrl/cem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mfucrl/error.hpp"
#include "mfucrl/seeds.hpp"

namespace mfucrl {

void CemConfig::validate() const {
  if (population < 2) throw ConfigError("planner.population", "must be at least 2");
  if (!(elite_frac > 0.0 && elite_frac <= 1.0)) throw ConfigError("planner.elite_frac", "must lie in (0, 1]");
  if (generations < 1) throw ConfigError("planner.generations", "must be at least 1");
  if (!(init_std > 0.0)) throw ConfigError("planner.init_std", "must be positive");
  if (!(var_floor >= 0.0)) throw ConfigError("planner.var_floor", "must be non-negative");
}

int CemConfig::elites() const {
  return std::clamp(static_cast<int>(std::lround(elite_frac * population)), 1, population);
}

CemResult cem_maximize(const CemObjective& objective, std::span<const std::size_t> blocks, const CemConfig& config,
                       std::uint64_t seed, std::span<const double> init_mean,
                       std::span<const std::vector<double>> injected) {
  config.validate();
  const std::size_t dim = std::accumulate(blocks.begin(), blocks.end(), std::size_t{0});
  if (!init_mean.empty() && init_mean.size() != dim) throw PlanningError("initial mean has the wrong dimension");
  for (const auto& c : injected)
    if (c.size() != dim) throw PlanningError("injected candidate has the wrong dimension");
  if (injected.size() + 1 > static_cast<std::size_t>(config.population))
    throw PlanningError("more injected candidates than population slots");

  std::vector<double> mean(dim, 0.0);
  if (!init_mean.empty()) mean.assign(init_mean.begin(), init_mean.end());
  std::vector<double> sd(dim, config.init_std);
  const double sd_floor = std::sqrt(config.var_floor);

  const auto pop = static_cast<std::size_t>(config.population);
  const auto n_elite = static_cast<std::size_t>(config.elites());
  std::vector<std::vector<double>> cand(pop, std::vector<double>(dim));
  std::vector<double> score(pop);
  std::vector<std::size_t> order(pop);

  CemResult result;
  bool have_best = false;
  for (int g = 0; g < config.generations; ++g) {
    for (std::size_t i = 0; i < pop; ++i) {
      auto& x = cand[i];
      if (i == 0) {
        x = mean;
      } else if (g == 0 && i - 1 < injected.size()) {
        x = injected[i - 1];
      } else {
        std::size_t d = 0;
        for (std::size_t b = 0; b < blocks.size(); ++b) {
          const std::uint64_t key = derive_seed(seed, {static_cast<std::uint64_t>(g), i, b});
          for (std::size_t k = 0; k < blocks[b]; ++k, ++d) x[d] = mean[d] + sd[d] * key_normal(key + k);
        }
      }
      score[i] = objective(x);
      ++result.evals;
    }

    std::iota(order.begin(), order.end(), std::size_t{0});
    auto finite_end = std::stable_partition(order.begin(), order.end(),
                                            [&](std::size_t i) { return std::isfinite(score[i]); });
    const auto finite = static_cast<std::size_t>(finite_end - order.begin());
    if (finite == 0) throw PlanningError("every candidate of generation " + std::to_string(g) + " is non-finite");
    std::stable_sort(order.begin(), finite_end, [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });

    const std::size_t top = order.front();
    if (!have_best || score[top] > result.best_score) {
      result.best = cand[top];
      result.best_score = score[top];
      have_best = true;
    }
    result.history.push_back(result.best_score);

    const std::size_t k = std::min(n_elite, finite);
    for (std::size_t d = 0; d < dim; ++d) {
      double m = 0.0;
      for (std::size_t e = 0; e < k; ++e) m += cand[order[e]][d];
      m /= static_cast<double>(k);
      double v = 0.0;
      for (std::size_t e = 0; e < k; ++e) {
        const double diff = cand[order[e]][d] - m;
        v += diff * diff;
      }
      mean[d] = m;
      sd[d] = std::max(std::sqrt(v / static_cast<double>(k)), sd_floor);
    }
  }
  return result;
}

}  // namespace mfucrl
