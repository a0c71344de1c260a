#include "m3pcg/level_params.hpp"

#include <sstream>

namespace m3pcg {

void to_json(nlohmann::json& j, const LevelParams& p) {
  j = nlohmann::json{
      {"num_different_pieces", p.num_different_pieces},
      {"score_goal", p.score_goal},
      {"board_width", p.board_width},
      {"board_height", p.board_height},
      {"num_moves", p.num_moves},
      {"collection_goals", p.collection_goals},
  };
}

void from_json(const nlohmann::json& j, LevelParams& p) {
  j.at("num_different_pieces").get_to(p.num_different_pieces);
  j.at("score_goal").get_to(p.score_goal);
  j.at("board_width").get_to(p.board_width);
  j.at("board_height").get_to(p.board_height);
  j.at("num_moves").get_to(p.num_moves);
  j.at("collection_goals").get_to(p.collection_goals);
}

std::string to_string(const LevelParams& p) {
  std::ostringstream out;
  out << p.board_width << "x" << p.board_height << " pieces=" << p.num_different_pieces
      << " score_goal=" << p.score_goal << " moves=" << p.num_moves << " goals=[";
  for (std::size_t i = 0; i < p.collection_goals.size(); ++i) {
    if (i) out << ",";
    out << p.collection_goals[i];
  }
  out << "]";
  return out.str();
}

}  // namespace m3pcg
