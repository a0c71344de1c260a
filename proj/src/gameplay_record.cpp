#include "m3pcg/gameplay_record.hpp"

namespace m3pcg {

std::vector<std::string> check_record(const GameplayRecord& r) {
  std::vector<std::string> reasons;
  auto require = [&reasons](bool ok, const char* reason) {
    if (!ok) reasons.emplace_back(reason);
  };
  require(r.level_in_row >= 1, "level_in_row: must be at least 1");
  require(r.score >= 0, "score: must not be negative");
  require(r.score_goal > 0, "score_goal: must be positive");
  require(r.num_moves > 0, "num_moves: must be positive");
  require(r.moves_left >= 0, "moves_left: must not be negative");
  require(r.moves_left <= r.num_moves, "moves_left: exceeds num_moves");
  require(r.num_failed_moves >= 0, "num_failed_moves: must not be negative");
  require(r.num_clicks_on_board >= 0, "num_clicks_on_board: must not be negative");
  require(r.num_boosters_used >= 0, "num_boosters_used: must not be negative");
  require(!r.user_rating || (*r.user_rating >= 1 && *r.user_rating <= 5), "user_rating: must be within 1..5");
  require(r.level_params.score_goal == r.score_goal, "score_goal: does not match level_params");
  require(r.level_params.num_moves == r.num_moves, "num_moves: does not match level_params");
  return reasons;
}

void to_json(nlohmann::json& j, const GameplayRecord& r) {
  j = nlohmann::json{
      {"level_in_row", r.level_in_row},
      {"score", r.score},
      {"score_goal", r.score_goal},
      {"moves_left", r.moves_left},
      {"num_moves", r.num_moves},
      {"num_failed_moves", r.num_failed_moves},
      {"num_clicks_on_board", r.num_clicks_on_board},
      {"num_boosters_used", r.num_boosters_used},
      {"user_rating", r.user_rating ? nlohmann::json(*r.user_rating) : nlohmann::json(nullptr)},
      {"level_params", r.level_params},
  };
}

void from_json(const nlohmann::json& j, GameplayRecord& r) {
  j.at("level_params").get_to(r.level_params);
  j.at("level_in_row").get_to(r.level_in_row);
  j.at("score").get_to(r.score);
  r.score_goal = j.value("score_goal", r.level_params.score_goal);
  j.at("moves_left").get_to(r.moves_left);
  r.num_moves = j.value("num_moves", r.level_params.num_moves);
  j.at("num_failed_moves").get_to(r.num_failed_moves);
  j.at("num_clicks_on_board").get_to(r.num_clicks_on_board);
  j.at("num_boosters_used").get_to(r.num_boosters_used);
  if (j.contains("user_rating") && !j.at("user_rating").is_null()) {
    r.user_rating = j.at("user_rating").get<int>();
  } else {
    r.user_rating.reset();
  }
}

}  // namespace m3pcg
