#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace m3pcg {

// Parameters of one generated level. Field names match the level-batch wire format.
struct LevelParams {
  int num_different_pieces = 0;
  int score_goal = 0;
  int board_width = 0;
  int board_height = 0;
  int num_moves = 0;
  std::vector<int> collection_goals;

  friend bool operator==(const LevelParams&, const LevelParams&) = default;
};

void to_json(nlohmann::json& j, const LevelParams& p);
// Unknown keys (including "level_number") are ignored.
void from_json(const nlohmann::json& j, LevelParams& p);

std::string to_string(const LevelParams& p);

}  // namespace m3pcg
