#pragma once

// Match-3 rules: board state, swaps, match detection, cascades, scoring and
// level outcome. All transitions are value-in/value-out; randomness only enters
// through the Rng (or RefillFn) argument.

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "m3pcg/level_params.hpp"
#include "m3pcg/rng.hpp"

namespace m3pcg {

using Color = std::int8_t;
inline constexpr Color kEmpty = -1;
inline constexpr int kMaxColors = 5;

inline constexpr int kPointsPerPiece = 20;
inline constexpr int kBonusPerExtraPiece = 10;
inline constexpr int kBoosterBudget = 3;
inline constexpr int kReshuffleAttempts = 100;

// x is the column, y the row; y = 0 is the top row and gravity pulls toward larger y.
struct Cell {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

class Board {
 public:
  Board() = default;
  Board(int width, int height, Color fill = kEmpty);

  // Rows top to bottom, one digit per cell ('0'..'4'; '.' for an empty cell).
  static Board from_rows(const std::vector<std::string_view>& rows);
  std::string to_string() const;

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }

  Color at(Cell c) const { return cells_[index(c)]; }
  void set(Cell c, Color color) { cells_[index(c)] = color; }
  void swap_cells(Cell a, Cell b) { std::swap(cells_[index(a)], cells_[index(b)]); }

  std::span<const Color> cells() const { return cells_; }
  std::span<Color> cells() { return cells_; }
  int filled_count() const;

  friend bool operator==(const Board&, const Board&) = default;

 private:
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y * width_ + c.x); }

  int width_ = 0;
  int height_ = 0;
  std::vector<Color> cells_;
};

// Cells of one match group, sorted by (x, y).
using MatchGroup = std::vector<Cell>;

// Horizontal and vertical same-color runs of length >= 3; runs sharing a cell
// are merged into one group. Groups are returned sorted by their first cell.
std::vector<MatchGroup> find_matches(const Board& board);

struct Swap {
  Cell a;
  Cell b;
  friend bool operator==(const Swap&, const Swap&) = default;
};

bool adjacent(Cell a, Cell b);

// Every orthogonally adjacent pair whose swap leaves at least one match on the
// board. Each unordered pair is listed once, with a before b in (x, y) order.
std::vector<Swap> available_moves(const Board& board);

using ColorCounts = std::array<int, kMaxColors>;

int total(const ColorCounts& counts);

// 20 points per piece, plus 10 for every piece beyond the third in a group.
int group_score(std::size_t group_size);

struct SettleResult {
  Board board;
  ColorCounts cleared{};
  int score_delta = 0;
  int cascades = 0;
};

using RefillFn = std::function<Color(Cell)>;

// Clears every match group, drops pieces down, refills from the top and repeats
// until no match remains. Refill visits columns left to right, each top-down.
SettleResult settle(Board board, const RefillFn& refill);
SettleResult settle(Board board, int palette_size, Rng& rng);

// Pulls pieces down in each column and refills the vacated top cells.
void collapse_and_refill(Board& board, const RefillFn& refill);

// Uniform fill with no pre-existing match and at least one productive swap.
Board fill_playable_board(int width, int height, int palette_size, Rng& rng);

// Reshuffles the existing pieces (same color multiset) until the board has a
// productive swap and no match; after kReshuffleAttempts a fresh board is dealt.
Board resolve_deadlock(Board board, int palette_size, Rng& rng);

struct LevelState {
  Board board;
  LevelParams params;
  std::vector<Color> goal_colors;        // one per collection goal
  std::vector<int> collection_progress;  // pieces collected, per goal
  int score = 0;
  int moves_left = 0;
  int failed_moves = 0;
  int clicks = 0;
  int boosters_used = 0;
};

enum class MoveKind { Committed, Reverted, Illegal };

struct MoveOutcome {
  MoveKind kind = MoveKind::Illegal;
  ColorCounts cleared{};
  int score_delta = 0;
  int cascades = 0;
};

enum class LevelStatus { InProgress, Completed, Failed };

std::string_view to_string(MoveKind kind);
std::string_view to_string(LevelStatus status);

class BoosterBudgetExhausted : public std::runtime_error {
 public:
  BoosterBudgetExhausted() : std::runtime_error("booster budget exhausted") {}
};

class LevelFinished : public std::logic_error {
 public:
  LevelFinished() : std::logic_error("level is no longer in progress") {}
};

LevelState start_level(const LevelParams& params, Board board, std::vector<Color> goal_colors);

// Throws std::out_of_range for coordinates off the board and LevelFinished when
// the level is already decided.
std::pair<LevelState, MoveOutcome> apply_move(const LevelState& state, Swap swap, Rng& rng);

// The 3x3 block centred on `cell`, clipped to the board.
std::vector<Cell> booster_region(const Board& board, Cell cell);

// Clears the 3x3 block around `cell` (clipped to the board) without using a move.
std::pair<LevelState, MoveOutcome> use_booster(const LevelState& state, Cell cell, Rng& rng);

LevelStatus level_status(const LevelState& state);

}  // namespace m3pcg
