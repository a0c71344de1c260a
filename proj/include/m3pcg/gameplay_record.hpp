#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "m3pcg/level_params.hpp"

namespace m3pcg {

// Telemetry for one level attempt, as sent by the client on level end.
struct GameplayRecord {
  int level_in_row = 0;
  int score = 0;
  int score_goal = 0;
  int moves_left = 0;
  int num_moves = 0;
  int num_failed_moves = 0;
  int num_clicks_on_board = 0;
  int num_boosters_used = 0;
  std::optional<int> user_rating;  // absent for dropouts
  LevelParams level_params;

  friend bool operator==(const GameplayRecord&, const GameplayRecord&) = default;
};

// Field-level reasons the record is not well formed; empty when it is.
std::vector<std::string> check_record(const GameplayRecord& record);

// Flat Table-1 keys plus a nested "level_params" object. score_goal and
// num_moves default to the nested level's values when omitted.
void to_json(nlohmann::json& j, const GameplayRecord& r);
void from_json(const nlohmann::json& j, GameplayRecord& r);

}  // namespace m3pcg
