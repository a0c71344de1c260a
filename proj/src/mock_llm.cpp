#include "m3pcg/mock_llm.hpp"

#include <algorithm>
#include <sstream>

#include "m3pcg/prompts.hpp"

namespace m3pcg {
namespace {

LevelParams template_level(PlayerType type, int step) {
  LevelParams p;
  switch (type) {
    case PlayerType::NotSoSkilled:
      p.num_different_pieces = 3;
      p.board_width = p.board_height = 4;
      p.num_moves = 30;
      p.score_goal = 702 + 48 * step;
      p.collection_goals = {5 + step / 2, 5 + (step + 1) / 2};
      break;
    case PlayerType::Casual:
      p.num_different_pieces = step == 0 ? 3 : 4;
      p.board_width = p.board_height = 5;
      p.num_moves = 27 - step;
      p.score_goal = 999 + 102 * step;
      p.collection_goals = {8 + step / 2, 8 + (step + 1) / 2};
      break;
    case PlayerType::Great:
      p.num_different_pieces = 5;
      p.board_width = p.board_height = 6;
      p.num_moves = 22 - step;
      p.score_goal = 1602 + 150 * step;
      p.collection_goals = step == 2 ? std::vector<int>{12, 12, 12, 12} : std::vector<int>{12 + step, 12 + step, 12};
      break;
  }
  return p;
}

}  // namespace

void to_json(nlohmann::json& j, const MockThresholds& t) {
  j = nlohmann::json{{"great_skill", t.great_skill},
                     {"great_rating", t.great_rating},
                     {"great_max_frustration", t.great_max_frustration},
                     {"weak_skill", t.weak_skill},
                     {"weak_rating", t.weak_rating},
                     {"weak_score_margin", t.weak_score_margin}};
}

void from_json(const nlohmann::json& j, MockThresholds& t) {
  t.great_skill = j.value("great_skill", t.great_skill);
  t.great_rating = j.value("great_rating", t.great_rating);
  t.great_max_frustration = j.value("great_max_frustration", t.great_max_frustration);
  t.weak_skill = j.value("weak_skill", t.weak_skill);
  t.weak_rating = j.value("weak_rating", t.weak_rating);
  t.weak_score_margin = j.value("weak_score_margin", t.weak_score_margin);
}

PlayerSummary summarize_history(std::span<const GameplayRecord> records) {
  PlayerSummary s;
  if (records.empty()) return s;
  if (records.size() > kMaxHistoryRecords) records = records.last(kMaxHistoryRecords);

  double skill = 0, failed = 0, clicks = 0, margin = 0, rating_sum = 0;
  int rated = 0;
  for (const auto& r : records) {
    skill += r.num_moves > 0 ? static_cast<double>(r.moves_left) / r.num_moves : 0.0;
    failed += r.num_failed_moves;
    clicks += r.num_clicks_on_board;
    margin += r.score_goal > 0 ? static_cast<double>(r.score) / r.score_goal : 0.0;
    if (r.user_rating) {
      rating_sum += *r.user_rating;
      ++rated;
    }
    s.last_level = std::max(s.last_level, r.level_in_row);
  }
  const double n = static_cast<double>(records.size());
  s.skill = skill / n;
  s.frustration = (failed / n) / std::max(1.0, (clicks / n) / 10.0);
  s.score_margin = margin / n;
  if (rated > 0) s.mean_rating = rating_sum / rated;
  return s;
}

PlayerType classify_player(const PlayerSummary& s, const MockThresholds& t) {
  if (s.skill >= t.great_skill && s.mean_rating >= t.great_rating && s.frustration <= t.great_max_frustration) {
    return PlayerType::Great;
  }
  if (s.skill < t.weak_skill || (s.mean_rating <= t.weak_rating && s.score_margin < t.weak_score_margin)) {
    return PlayerType::NotSoSkilled;
  }
  return PlayerType::Casual;
}

GenerationResult mock_generate(std::span<const GameplayRecord> records, const MockThresholds& thresholds) {
  GenerationResult result;
  const PlayerSummary summary = summarize_history(records);
  result.player_type = records.empty() ? PlayerType::Casual : classify_player(summary, thresholds);
  for (int step = 0; step < static_cast<int>(kBatchSize); ++step) {
    result.levels.push_back(template_level(result.player_type, step));
  }

  std::ostringstream why;
  why.precision(2);
  why << std::fixed;
  if (records.empty()) {
    why << "New player with no history; starting with mid-range casual levels.";
  } else {
    why << "Over the last " << std::min(records.size(), kMaxHistoryRecords) << " levels the player kept "
        << summary.skill * 100.0 << "% of moves, made " << summary.frustration
        << " failed moves per ten clicks and rated levels " << summary.mean_rating
        << " on average; treating them as a " << to_string(result.player_type) << ".";
  }
  result.reasoning = why.str();
  return result;
}

std::string MockLlmClient::complete(const LlmRequest& request) {
  const auto records = parse_history_prompt(request.history_text);
  const GenerationResult generated = mock_generate(records, thresholds_);
  const int next_level = records.empty() ? 1 : records.back().level_in_row + 1;

  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t i = 0; i < generated.levels.size(); ++i) {
    nlohmann::json level = generated.levels[i];
    level["level_number"] = next_level + static_cast<int>(i);
    levels.push_back(std::move(level));
  }
  const nlohmann::json body = {
      {"player_type", to_string(generated.player_type)},
      {"reasoning", generated.reasoning},
      {"levels", levels},
  };
  return body.dump();
}

}  // namespace m3pcg
