#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "m3pcg/bayes.hpp"
#include "m3pcg/levelgen.hpp"
#include "m3pcg/live_client.hpp"
#include "m3pcg/mock_llm.hpp"
#include "m3pcg/simulator.hpp"

namespace m3pcg {

struct AppConfig {
  ParamRanges ranges;
  LiveClientConfig llm;
  int retries = kDefaultRetries;
  MockThresholds mock;
  BehaviorConstants behavior;
  bayes::SamplerConfig sampler;
  std::string data_dir = "data";
  std::string host = "0.0.0.0";
  int port = 8080;
};

void to_json(nlohmann::json& j, const AppConfig& c);
// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, AppConfig& c);

// Reads the JSON file (if given), then applies M3PCG_* environment overrides:
// LLM_ENDPOINT, LLM_MODEL, LLM_API_KEY, LLM_RETRIES, DATA_DIR, PORT.
AppConfig load_config(const std::optional<std::filesystem::path>& file);

void apply_env_overrides(AppConfig& config);

}  // namespace m3pcg
