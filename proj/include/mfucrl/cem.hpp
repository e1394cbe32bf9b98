#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace mfucrl {

struct CemConfig {
  int population = 128;
  double elite_frac = 0.125;
  int generations = 40;
  double init_std = 0.5;
  double var_floor = 1e-4;

  void validate() const;
  int elites() const;

  bool operator==(const CemConfig&) const = default;
};

struct CemResult {
  std::vector<double> best;
  double best_score = 0.0;
  long evals = 0;
  /// Best-ever score after each generation.
  std::vector<double> history;
};

using CemObjective = std::function<double(std::span<const double>)>;

/// Cross-entropy maximization over a parameter vector made of consecutive
/// blocks.
///
/// Candidate i of generation g draws the noise for block b from streams keyed
/// by (seed, g, i, b), so a search over a prefix of the blocks samples exactly
/// the same values for that prefix. Candidate 0 is always the current mean;
/// `injected` candidates take the following slots of generation 0.
/// Non-finite scores are discarded; a generation without any finite score
/// throws PlanningError.
CemResult cem_maximize(const CemObjective& objective, std::span<const std::size_t> blocks, const CemConfig& config,
                       std::uint64_t seed, std::span<const double> init_mean = {},
                       std::span<const std::vector<double>> injected = {});

}  // namespace mfucrl
