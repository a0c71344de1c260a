// m3pcg: level service, experiment simulator and analysis front end.

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "m3pcg/analysis.hpp"
#include "m3pcg/config.hpp"
#include "m3pcg/http_api.hpp"
#include "m3pcg/mock_llm.hpp"
#include "m3pcg/service.hpp"
#include "m3pcg/simulator.hpp"

namespace fs = std::filesystem;
using namespace m3pcg;

namespace {

m3pcg::HttpApi* g_api = nullptr;

void on_signal(int) {
  if (g_api != nullptr) g_api->stop();
}

std::shared_ptr<LlmClient> make_client(const std::string& generator, const AppConfig& config) {
  if (generator == "live") {
    if (config.llm.endpoint.empty() || config.llm.model.empty()) {
      throw std::invalid_argument("live generator needs M3PCG_LLM_ENDPOINT and M3PCG_LLM_MODEL");
    }
    return std::make_shared<LiveLlmClient>(config.llm);
  }
  if (generator == "traditional-only") return nullptr;
  return std::make_shared<MockLlmClient>(config.mock);
}

int serve(const AppConfig& config, const std::string& generator) {
  TelemetryStore store(fs::path(config.data_dir));
  ThreadRunner runner;
  LevelService service(store, make_client(generator, config), ServiceConfig{config.ranges, config.retries, 0}, runner);
  HttpApi api(service);
  const int port = api.bind(config.host, config.port);
  if (port < 0) throw std::runtime_error("cannot bind " + config.host);
  g_api = &api;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on " << config.host << ':' << port << " (generator " << generator << ", data "
            << config.data_dir << ")" << std::endl;
  api.listen();
  g_api = nullptr;
  service.wait_idle();
  return 0;
}

int simulate(const AppConfig& config, SimulationConfig sim, const std::string& out_dir, bool overwrite) {
  const fs::path dir(out_dir);
  for (const char* name : {TelemetryStore::kEventLogName, TelemetryStore::kSnapshotName}) {
    if (fs::exists(dir / name)) {
      if (!overwrite) throw std::runtime_error((dir / name).string() + " exists; pass --overwrite to replace it");
      fs::remove(dir / name);
    }
  }
  sim.ranges = config.ranges;
  sim.thresholds = config.mock;
  sim.behavior = config.behavior;
  sim.live = config.llm;
  sim.retries = config.retries;

  SimulationSummary summary;
  std::vector<ExportRow> rows;
  {
    TelemetryStore store(dir, logical_clock());
    summary = run_experiment(sim, store);
    rows = store.export_dataset();
  }
  std::ofstream(dir / "export.csv") << export_csv(rows);

  const nlohmann::json out = {{"players", summary.players},
                              {"levels_started", summary.levels_started},
                              {"levels_completed", summary.levels_completed},
                              {"model_calls", summary.model_calls},
                              {"fallbacks", summary.fallbacks},
                              {"max_history_in_request", summary.max_history_in_request},
                              {"event_log", (dir / TelemetryStore::kEventLogName).string()},
                              {"export", (dir / "export.csv").string()}};
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int analyze_cmd(const AppConfig& config, const std::string& input, const std::string& model_name,
                const std::string& format, AnalysisOptions options) {
  const auto model = parse_analysis_model(model_name);
  if (!model) throw std::invalid_argument("unknown model " + model_name);
  options.sampler = config.sampler;
  const auto rows = load_rows(input);
  const AnalysisReport report = analyze(rows, *model, options);
  if (format == "text") {
    std::cout << report.to_text();
  } else {
    std::cout << report.to_json().dump(2) << std::endl;
  }
  return 0;
}

int gen_level(const AppConfig& config, const std::string& group, const std::string& generator, std::uint64_t seed,
              const std::string& history_file) {
  nlohmann::json out;
  if (group == "traditional") {
    Rng rng(seed);
    out = {{"source", "traditional"}, {"levels", level_batch_to_json(generate_traditional_batch(rng, config.ranges))}};
  } else {
    std::vector<GameplayRecord> history;
    if (!history_file.empty()) {
      std::ifstream in(history_file);
      if (!in) throw std::runtime_error("cannot read " + history_file);
      nlohmann::json::parse(in).get_to(history);
    }
    auto client = make_client(generator == "traditional-only" ? "mock" : generator, config);
    const LlmRequest request =
        history.empty() ? make_first_levels_request(config.ranges) : make_history_request(history, config.ranges);
    const GenerationResult result = request_levels(*client, request, config.ranges, config.retries);
    out = {{"source", client->is_mock() ? "mock_llm" : "llm"},
           {"player_type", to_string(result.player_type)},
           {"reasoning", result.reasoning},
           {"levels", level_batch_to_json(result.levels)}};
  }
  std::cout << out.dump(2) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personalized match-3 level generation: service, simulator, analysis"};
  app.require_subcommand(1);
  std::string config_file;
  app.add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);

  std::string generator = "mock";
  const std::vector<std::string> generators{"mock", "live", "traditional-only"};

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  std::string host, data_dir;
  int port = -1;
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--data-dir", data_dir);
  serve_cmd->add_option("--generator", generator)->check(CLI::IsMember(generators));

  auto* sim_cmd = app.add_subcommand("simulate", "Run a synthetic A/B experiment");
  SimulationConfig sim;
  std::string sim_generator = "mock", out_dir = "sim-data";
  bool overwrite = false;
  sim_cmd->add_option("--players", sim.n_players)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim.seed);
  sim_cmd->add_option("--generator", sim_generator)->check(CLI::IsMember(generators));
  sim_cmd->add_option("--max-levels", sim.max_levels_per_player)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--out", out_dir, "Directory for events.jsonl, profiles.json and export.csv");
  sim_cmd->add_flag("--overwrite", overwrite);

  auto* an_cmd = app.add_subcommand("analyze", "Bayesian comparison of the two groups");
  std::string input, model = "completion", format = "json";
  AnalysisOptions options;
  double reference = -1.0;
  an_cmd->add_option("--input", input, "export.csv or events.jsonl")->required()->check(CLI::ExistingFile);
  an_cmd->add_option("--model", model)->check(CLI::IsMember({"completion", "ratings", "ratings-with-dropouts"}));
  an_cmd->add_option("--format", format)->check(CLI::IsMember({"json", "text"}));
  an_cmd->add_option("--mc-draws", options.monte_carlo.draws);
  an_cmd->add_option("--mc-seed", options.monte_carlo.seed);
  an_cmd->add_option("--first-level-reference", reference, "Flag the first-level probability if it differs");

  auto* gen_cmd = app.add_subcommand("gen-level", "Generate one batch of three levels");
  std::string group = "llm", history_file;
  std::uint64_t gen_seed = 1;
  gen_cmd->add_option("--group", group)->check(CLI::IsMember({"llm", "traditional"}));
  gen_cmd->add_option("--generator", generator)->check(CLI::IsMember(generators));
  gen_cmd->add_option("--seed", gen_seed);
  gen_cmd->add_option("--history", history_file, "JSON array of gameplay records")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    AppConfig config = load_config(config_file.empty() ? std::nullopt : std::optional<fs::path>(config_file));
    if (!host.empty()) config.host = host;
    if (port >= 0) config.port = port;
    if (!data_dir.empty()) config.data_dir = data_dir;

    if (*serve_cmd) return serve(config, generator);
    if (*sim_cmd) {
      sim.generator = *parse_generator_kind(sim_generator);
      return simulate(config, sim, out_dir, overwrite);
    }
    if (*an_cmd) {
      if (reference >= 0.0) options.first_level_reference = reference;
      return analyze_cmd(config, input, model, format, options);
    }
    if (*gen_cmd) return gen_level(config, group, generator, gen_seed, history_file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
