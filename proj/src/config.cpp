#include "m3pcg/config.hpp"

#include <cstdlib>
#include <fstream>

namespace m3pcg {
namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

int env_int(const char* name, const std::string& text) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument(std::string(name) + " must be an integer");
}

}  // namespace

void to_json(nlohmann::json& j, const AppConfig& c) {
  j = {{"ranges", c.ranges},
       {"llm", {{"endpoint", c.llm.endpoint}, {"model", c.llm.model}, {"timeout_seconds", c.llm.timeout_seconds}}},
       {"retries", c.retries},
       {"mock", c.mock},
       {"behavior", c.behavior},
       {"sampler",
        {{"chains", c.sampler.chains},
         {"draws", c.sampler.draws},
         {"burn_in", c.sampler.burn_in},
         {"seed", c.sampler.seed},
         {"prior_scale", c.sampler.prior_scale}}},
       {"data_dir", c.data_dir},
       {"host", c.host},
       {"port", c.port}};
}

void from_json(const nlohmann::json& j, AppConfig& c) {
  if (j.contains("ranges")) j.at("ranges").get_to(c.ranges);
  if (j.contains("llm")) {
    const auto& l = j.at("llm");
    c.llm.endpoint = l.value("endpoint", c.llm.endpoint);
    c.llm.model = l.value("model", c.llm.model);
    c.llm.api_key = l.value("api_key", c.llm.api_key);
    c.llm.timeout_seconds = l.value("timeout_seconds", c.llm.timeout_seconds);
  }
  c.retries = j.value("retries", c.retries);
  if (j.contains("mock")) j.at("mock").get_to(c.mock);
  if (j.contains("behavior")) j.at("behavior").get_to(c.behavior);
  if (j.contains("sampler")) {
    const auto& s = j.at("sampler");
    c.sampler.chains = s.value("chains", c.sampler.chains);
    c.sampler.draws = s.value("draws", c.sampler.draws);
    c.sampler.burn_in = s.value("burn_in", c.sampler.burn_in);
    c.sampler.seed = s.value("seed", c.sampler.seed);
    c.sampler.prior_scale = s.value("prior_scale", c.sampler.prior_scale);
  }
  c.data_dir = j.value("data_dir", c.data_dir);
  c.host = j.value("host", c.host);
  c.port = j.value("port", c.port);
}

void apply_env_overrides(AppConfig& config) {
  if (auto v = env("M3PCG_LLM_ENDPOINT")) config.llm.endpoint = *v;
  if (auto v = env("M3PCG_LLM_MODEL")) config.llm.model = *v;
  if (auto v = env("M3PCG_LLM_API_KEY")) config.llm.api_key = *v;
  if (auto v = env("M3PCG_LLM_RETRIES")) config.retries = env_int("M3PCG_LLM_RETRIES", *v);
  if (auto v = env("M3PCG_DATA_DIR")) config.data_dir = *v;
  if (auto v = env("M3PCG_PORT")) config.port = env_int("M3PCG_PORT", *v);
}

AppConfig load_config(const std::optional<std::filesystem::path>& file) {
  AppConfig config;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw std::runtime_error("cannot read config " + file->string());
    nlohmann::json::parse(in).get_to(config);
  }
  apply_env_overrides(config);
  config.ranges.check();
  if (config.retries < 0) throw std::invalid_argument("retries must be non-negative");
  return config;
}

}  // namespace m3pcg
