#pragma once

#include <string>

#include <json.hpp>

#include "qdpref/engine.hpp"
#include "qdpref/preference.hpp"

namespace qdpref {

// Every tunable of a design session. JSON keys are listed in config_to_json.
struct SessionConfig {
  int room_width = Room::kDefaultWidth;
  int room_height = Room::kDefaultHeight;
  EngineConfig engine;
  TrainingConfig training;
  double test_fraction = 0.1;
  StepMetric adhoc_metric = StepMetric::Chebyshev;
  int publish_every_generations = 50;
  int publish_interval_ms = 500;       // live sessions: publish at least this often
  int publish_min_interval_ms = 100;   // live sessions: and at most this often
  int swap_delay_generations = 100;    // lockstep sessions: generations between apply and model swap
  int top_k = 6;
};

nlohmann::json config_to_json(const SessionConfig& config);
/// Overrides defaults with the keys present in `j`. Unknown keys or bad values throw ConfigError.
SessionConfig config_from_json(const nlohmann::json& j);
SessionConfig load_config_file(const std::string& path);

}  // namespace qdpref
