#pragma once

// Synthetic players. The behaviour model is deliberately simple and every
// constant lives in BehaviorConstants, so experiments pin seeds, not theory.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "m3pcg/engine.hpp"
#include "m3pcg/gameplay_record.hpp"
#include "m3pcg/levelgen.hpp"
#include "m3pcg/live_client.hpp"
#include "m3pcg/mock_llm.hpp"
#include "m3pcg/rng.hpp"
#include "m3pcg/telemetry.hpp"

namespace m3pcg {

struct Persona {
  double skill = 0.5;                  // chance of taking the best swap
  double patience = 0.5;               // quit resistance
  double difficulty_preference = 0.5;  // preferred challenge, 0 easy .. 1 hard
  double booster_propensity = 0.5;

  void check() const;
};

struct BehaviorConstants {
  double quit_scale = 0.3;            // per-move quit probability at frustration 1, patience 0
  double revert_frustration = 1.0;    // per consecutive reverted swap
  double lag_frustration = 2.0;       // per unit of move budget spent ahead of progress
  double booster_rate = 0.5;          // scales booster_propensity when stalled
  double stall_lag = 0.15;            // progress lag that counts as stalled
  double leave_after_completion = 0.15;  // scaled by (1 - patience), more after low ratings
  double leave_after_dropout = 0.4;  // scaled by (1 - patience)
  double leave_floor = 0.04;
};

void to_json(nlohmann::json& j, const BehaviorConstants& b);
void from_json(const nlohmann::json& j, BehaviorConstants& b);

enum class PlayOutcome { Completed, Failed, Quit };
std::string_view to_string(PlayOutcome outcome);

struct PlayResult {
  PlayOutcome outcome = PlayOutcome::Failed;
  GameplayRecord record;  // user_rating left empty
  int committed_swaps = 0;
  int reverted_swaps = 0;
  int illegal_swaps = 0;
};

PlayResult play_level(const Persona& persona, const LevelParams& params, int level_in_row, Rng& rng,
                      const BehaviorConstants& behavior = {});

// Blend of goal tightness (score_goal / score) and budget used, in [0, 1].
double level_difficulty(const GameplayRecord& record);

// clamp(round(5 - 4 |difficulty - preference|) + noise, 1, 5).
int rating_from_difficulty(double difficulty, double preference, int noise);

// Noise is drawn uniformly from {-1, 0, +1}. Throws std::logic_error unless the
// run was completed.
int rate_level(const Persona& persona, const PlayResult& result, Rng& rng);

struct UniformRange {
  double lo = 0.0;
  double hi = 1.0;
};

struct PersonaDistribution {
  UniformRange skill;
  UniformRange patience;
  UniformRange difficulty_preference;
  UniformRange booster_propensity;

  Persona sample(Rng& rng) const;
};

enum class GeneratorKind { Mock, Live, TraditionalOnly };
std::string_view to_string(GeneratorKind kind);
std::optional<GeneratorKind> parse_generator_kind(std::string_view text);

struct SimulationConfig {
  int n_players = 102;
  std::uint64_t seed = 7;
  int max_levels_per_player = 30;
  GeneratorKind generator = GeneratorKind::Mock;
  PersonaDistribution personas;
  BehaviorConstants behavior;
  ParamRanges ranges;
  MockThresholds thresholds;
  LiveClientConfig live;
  int retries = kDefaultRetries;

  void check() const;
};

struct SimulationSummary {
  int players = 0;
  int levels_started = 0;
  int levels_completed = 0;
  std::int64_t model_calls = 0;
  std::int64_t fallbacks = 0;
  std::size_t max_history_in_request = 0;
};

// Deterministic counter clock for reproducible event logs.
TelemetryStore::Clock logical_clock(std::int64_t start = 1'700'000'000'000, std::int64_t step = 1'000);

// Plays every player to the end through a LevelService with an inline runner.
// `client` overrides the generator wiring (tests use counting or failing clients).
SimulationSummary run_experiment(const SimulationConfig& config, TelemetryStore& store,
                                 std::shared_ptr<LlmClient> client = {});

}  // namespace m3pcg
