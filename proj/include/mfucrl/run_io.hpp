#pragma once

#include <iosfwd>
#include "json.hpp"
#include <string>

#include "mfucrl/driver.hpp"

namespace mfucrl {

nlohmann::json to_json(const GridDistribution& dist);
GridDistribution distribution_from_json(const nlohmann::json& j);

/// Model checkpoint: kernel, hyperparameters, retained inputs, targets,
/// noise variance and beta mode. Reloading refits the same factorization.
nlohmann::json checkpoint_json(const GpPosterior& gp, const BetaMode& beta_mode);
GpPosterior load_checkpoint(const nlohmann::json& j);

nlohmann::json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);

inline constexpr const char* kEpisodesHeader = "t,J_real,J_predicted,J_star,regret,sigma_sum,n_data,beta,wall_time_ms";
void write_episodes_csv(std::ostream& out, const RunManifest& manifest);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace mfucrl
