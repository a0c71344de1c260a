#include "m3pcg/prompts.hpp"

#include <regex>
#include <sstream>
#include <stdexcept>

namespace m3pcg {
namespace {

constexpr const char* kParameterGuidance =
    "Parameters of a level:\n"
    "- level_number: A number of the current level.\n"
    "- num_different_pieces: More different pieces, harder the game. Valid range (3, 5).\n"
    "- score_goal: The score a user must reach before completing the level. The score should be "
    "divisable by 3. Valid range (700, 2000).\n"
    "- num_moves - Amount of moves a user has to complete the game. Harder levels need more moves: "
    "consider collection_goals. Usually number is (20, 30).\n"
    "- board_width - How wide the board is. Wider is harder. Valid range (4, 6).\n"
    "- board_height - Height of the board. Higher is harder. Should be very similar to board-width. "
    "Valid range (4, 6).\n"
    "- collection_goals - To finish the level, you need to collect a certain number of pieces with a "
    "specific color.\n"
    "The game involves (2, 4) unique colors, each represented by a number of pieces between (5, 15).\n"
    "For instance, if the game requires two different colors, you may need to collect 10 pieces of one "
    "color and 20 pieces of another, represented as [10, 20].\n";

constexpr const char* kPlayerTypes =
    "Player types: not so skilled player, casual player, great player.\n";

constexpr const char* kTaskSteps =
    "Your task is to:\n"
    "1. Consider the data on the player.\n"
    "2. Consider parameters of the levels the player already completed.\n"
    "3. Determine what type of player we are dealing with based on a list of player types. Mostly "
    "consider the level of skill, fun vs. complex, puzzly vs arcade.\n"
    "4. Suggest the next 3 levels for this player based on the type of gamer and the list of level "
    "completion parameters.\n"
    "5. Explain your reasoning for the type of gamer and next 3 levels.\n";

constexpr const char* kFirstLevels =
    "Your task is to suggest 3 levels of a game to a player that is completely new to it and starts "
    "with level 1.\n";

}  // namespace

std::string history_paragraph(const GameplayRecord& r) {
  std::ostringstream out;
  out << "For level " << r.level_in_row << ", the user scored " << r.score << " where " << r.score_goal
      << " was the minimum to pass. They had " << r.moves_left << " moves left out of " << r.num_moves
      << ". They made " << r.num_failed_moves << " failed moves. They made " << r.num_clicks_on_board
      << " clicks on the board. They used " << r.num_boosters_used << " boosters. ";
  if (r.user_rating) {
    out << "The player rated the level as " << *r.user_rating << " out of 5.";
  } else {
    out << "The player did not rate the level.";
  }
  out << " The level contained " << r.level_params.num_different_pieces
      << " different pieces. Board width x height was " << r.level_params.board_width << " x "
      << r.level_params.board_height << ".";
  return out.str();
}

std::string build_history_prompt(std::span<const GameplayRecord> records) {
  if (records.empty()) throw std::invalid_argument("history prompt needs at least one record");
  if (records.size() > kMaxHistoryRecords) records = records.last(kMaxHistoryRecords);
  std::string text;
  for (const auto& r : records) {
    if (!text.empty()) text += "\n\n";
    text += history_paragraph(r);
  }
  return text;
}

const std::string& build_instruction_prompt() {
  static const std::string text = std::string(kTaskSteps) + "\n" + kPlayerTypes + "\n" + kParameterGuidance;
  return text;
}

const std::string& build_first_levels_prompt() {
  static const std::string text = std::string(kFirstLevels) + "\n" + kParameterGuidance;
  return text;
}

std::vector<GameplayRecord> parse_history_prompt(const std::string& text) {
  static const std::regex paragraph(
      R"(For level (\d+), the user scored (\d+) where (\d+) was the minimum to pass\. They had (\d+) moves left )"
      R"(out of (\d+)\. They made (\d+) failed moves\. They made (\d+) clicks on the board\. They used (\d+) )"
      R"(boosters\. (?:The player rated the level as (\d+) out of 5|The player did not rate the level)\. The )"
      R"(level contained (\d+) different pieces\. Board width x height was (\d+) x (\d+)\.)");
  std::vector<GameplayRecord> records;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), paragraph); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    auto num = [&m](std::size_t i) { return std::stoi(m[i].str()); };
    GameplayRecord r;
    r.level_in_row = num(1);
    r.score = num(2);
    r.score_goal = num(3);
    r.moves_left = num(4);
    r.num_moves = num(5);
    r.num_failed_moves = num(6);
    r.num_clicks_on_board = num(7);
    r.num_boosters_used = num(8);
    if (m[9].matched) r.user_rating = num(9);
    r.level_params.num_different_pieces = num(10);
    r.level_params.board_width = num(11);
    r.level_params.board_height = num(12);
    r.level_params.score_goal = r.score_goal;
    r.level_params.num_moves = r.num_moves;
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace m3pcg
