#pragma once

#include <span>

#include "m3pcg/llm.hpp"

namespace m3pcg {

// Calibration constants for the offline stand-in. The defaults classify the
// two-level example history (18/25 moves left, ratings 1 and 5) as casual.
struct MockThresholds {
  double great_skill = 0.5;
  double great_rating = 3.0;
  double great_max_frustration = 0.1;
  double weak_skill = 0.2;
  double weak_rating = 2.0;
  double weak_score_margin = 1.25;  // mean score / score_goal
};

void to_json(nlohmann::json& j, const MockThresholds& t);
void from_json(const nlohmann::json& j, MockThresholds& t);

struct PlayerSummary {
  double skill = 0.0;         // mean moves_left / num_moves
  double frustration = 0.0;   // mean failed moves per ten clicks
  double mean_rating = 3.0;   // 3 when nothing was rated
  double score_margin = 1.0;  // mean score / score_goal
  int last_level = 0;
};

PlayerSummary summarize_history(std::span<const GameplayRecord> records);
PlayerType classify_player(const PlayerSummary& summary, const MockThresholds& thresholds);

// Deterministic heuristic replacement for the model: classify, then emit three
// levels from the player type's template with mild progression.
GenerationResult mock_generate(std::span<const GameplayRecord> records, const MockThresholds& thresholds = {});

// Reads the history back out of the prompt text, so it sees exactly what a
// live model would.
class MockLlmClient : public LlmClient {
 public:
  explicit MockLlmClient(MockThresholds thresholds = {}) : thresholds_(thresholds) {}
  std::string complete(const LlmRequest& request) override;
  bool is_mock() const override { return true; }

 private:
  MockThresholds thresholds_;
};

}  // namespace m3pcg
