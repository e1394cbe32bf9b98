#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfucrl/gp.hpp"
#include "mfucrl/planner.hpp"
#include "mfucrl/swarm.hpp"

namespace mfucrl {

struct EnvSettings {
  std::string dynamics = "basic";
  int bins = 200;
  int horizon = 200;
  std::optional<double> dt;         // defaults to 1 / H
  double a_min = -7.0;
  double a_max = 7.0;
  std::string initial = "ergodic";
  std::optional<double> noise_std;  // defaults to sqrt(dt)

  bool operator==(const EnvSettings&) const = default;
};

struct ModelSettings {
  KernelSpec kernel;
  /// Likelihood noise: a number, "dt" (true transition variance) or "pH".
  std::string noise_var = "dt";
  std::size_t subset_cap = 128;
  GpApprox approx = GpApprox::Subset;
  BetaMode beta;
  FeatureMode features;

  bool operator==(const ModelSettings&) const = default;
};

struct LoopSettings {
  int episodes = 20;
  int particles = 4;

  bool operator==(const LoopSettings&) const = default;
};

/// Oracle checks run by the validate command.
struct ValidateSettings {
  std::size_t particles = 50000;     // flow vs particle simulation
  std::size_t mc_particles = 10000;  // integrated reward vs Monte Carlo
  int policies = 3;
  int pairs = 5;
  int steps = 20;
  double w1_tol = 0.02;
  double stderr_mult = 3.0;
  /// Test hook: false drops mass leaving [0, 1) instead of wrapping it.
  bool periodic = true;

  bool operator==(const ValidateSettings&) const = default;
};

/// Complete experiment configuration, read from an INI file with sections
/// [env], [model], [planner], [loop], [validate] and [run].
struct RunConfig {
  EnvSettings env;
  ModelSettings model;
  OptimizerConfig planner;
  LoopSettings loop;
  ValidateSettings check;
  std::uint64_t seed = 0;
  std::string out_dir;

  /// Resolved environment constants.
  SwarmConfig swarm() const;
  /// Resolved likelihood noise variance.
  double noise_var() const;
  /// Input width of the dynamics model.
  std::size_t model_dim() const { return 3 + static_cast<std::size_t>(model.features.width()); }

  /// Throws ConfigError naming the offending key.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

/// Parses INI text, applying `overrides` ("section.key=value") on top.
/// Unknown sections or keys are rejected.
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});

/// Reads and parses a config file; a missing file is a ConfigError.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// INI text that parses back to an equal config.
std::string serialize_config(const RunConfig& config);

/// Desk-scale defaults (M=100, H=50, dt=1/50, T=15).
RunConfig desk_config();

}  // namespace mfucrl
