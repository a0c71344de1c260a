#include "m3pcg/engine.hpp"

#include <algorithm>
#include <numeric>

namespace m3pcg {
namespace {

constexpr int kMaxCascades = 10'000;
constexpr int kFillAttempts = 1'000;

bool has_match(const Board& board) {
  const int w = board.width();
  const int h = board.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Color c = board.at({x, y});
      if (c == kEmpty) continue;
      if (x + 2 < w && board.at({x + 1, y}) == c && board.at({x + 2, y}) == c) return true;
      if (y + 2 < h && board.at({x, y + 1}) == c && board.at({x, y + 2}) == c) return true;
    }
  }
  return false;
}

template <typename Visit>
void for_each_adjacent_pair(const Board& board, Visit&& visit) {
  for (int x = 0; x < board.width(); ++x) {
    for (int y = 0; y < board.height(); ++y) {
      const Cell a{x, y};
      for (const Cell b : {Cell{x, y + 1}, Cell{x + 1, y}}) {
        if (!board.in_bounds(b)) continue;
        if (!visit(Swap{a, b})) return;
      }
    }
  }
}

bool has_productive_swap(const Board& board) {
  Board scratch = board;
  bool found = false;
  for_each_adjacent_pair(board, [&](Swap s) {
    scratch.swap_cells(s.a, s.b);
    found = has_match(scratch);
    scratch.swap_cells(s.a, s.b);
    return !found;
  });
  return found;
}

bool playable(const Board& board) { return !has_match(board) && has_productive_swap(board); }

void add_clears(LevelState& state, const ColorCounts& cleared) {
  for (std::size_t i = 0; i < state.goal_colors.size(); ++i) {
    state.collection_progress[i] += cleared[static_cast<std::size_t>(state.goal_colors[i])];
  }
}

void merge_settle(MoveOutcome& out, const SettleResult& settled) {
  for (std::size_t c = 0; c < out.cleared.size(); ++c) out.cleared[c] += settled.cleared[c];
  out.score_delta += settled.score_delta;
  out.cascades += settled.cascades;
}

void check_bounds(const Board& board, Cell c) {
  if (!board.in_bounds(c)) {
    throw std::out_of_range("cell (" + std::to_string(c.x) + "," + std::to_string(c.y) +
                            ") is outside the " + std::to_string(board.width()) + "x" +
                            std::to_string(board.height()) + " board");
  }
}

}  // namespace

Board::Board(int width, int height, Color fill)
    : width_(width), height_(height), cells_(static_cast<std::size_t>(width * height), fill) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("board dimensions must be positive");
}

Board Board::from_rows(const std::vector<std::string_view>& rows) {
  if (rows.empty()) throw std::invalid_argument("board needs at least one row");
  Board board(static_cast<int>(rows.front().size()), static_cast<int>(rows.size()));
  for (int y = 0; y < board.height(); ++y) {
    const auto row = rows[static_cast<std::size_t>(y)];
    if (static_cast<int>(row.size()) != board.width()) {
      throw std::invalid_argument("ragged board rows");
    }
    for (int x = 0; x < board.width(); ++x) {
      const char ch = row[static_cast<std::size_t>(x)];
      if (ch == '.') continue;
      if (ch < '0' || ch >= '0' + kMaxColors) throw std::invalid_argument("bad cell character");
      board.set({x, y}, static_cast<Color>(ch - '0'));
    }
  }
  return board;
}

std::string Board::to_string() const {
  std::string out;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const Color c = at({x, y});
      out.push_back(c == kEmpty ? '.' : static_cast<char>('0' + c));
    }
    out.push_back('\n');
  }
  return out;
}

int Board::filled_count() const {
  return static_cast<int>(std::count_if(cells_.begin(), cells_.end(), [](Color c) { return c != kEmpty; }));
}

std::vector<MatchGroup> find_matches(const Board& board) {
  const int w = board.width();
  const int h = board.height();
  std::vector<int> owner(static_cast<std::size_t>(w * h), -1);
  std::vector<int> parent;

  auto root = [&](int r) {
    while (parent[static_cast<std::size_t>(r)] != r) {
      parent[static_cast<std::size_t>(r)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(r)])];
      r = parent[static_cast<std::size_t>(r)];
    }
    return r;
  };
  auto claim = [&](Cell c, int run) {
    int& o = owner[static_cast<std::size_t>(c.y * w + c.x)];
    if (o < 0) {
      o = run;
    } else {
      parent[static_cast<std::size_t>(root(run))] = root(o);
    }
  };
  // Scans one line of cells, registering every run of three or more.
  auto scan = [&](int length, auto cell_at) {
    int start = 0;
    while (start < length) {
      const Color c = board.at(cell_at(start));
      int end = start + 1;
      while (end < length && board.at(cell_at(end)) == c) ++end;
      if (c != kEmpty && end - start >= 3) {
        const int run = static_cast<int>(parent.size());
        parent.push_back(run);
        for (int i = start; i < end; ++i) claim(cell_at(i), run);
      }
      start = end;
    }
  };

  for (int y = 0; y < h; ++y) scan(w, [y](int i) { return Cell{i, y}; });
  for (int x = 0; x < w; ++x) scan(h, [x](int i) { return Cell{x, i}; });

  std::vector<MatchGroup> groups;
  std::vector<int> group_of_root(parent.size(), -1);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      const int o = owner[static_cast<std::size_t>(y * w + x)];
      if (o < 0) continue;
      int& slot = group_of_root[static_cast<std::size_t>(root(o))];
      if (slot < 0) {
        slot = static_cast<int>(groups.size());
        groups.emplace_back();
      }
      groups[static_cast<std::size_t>(slot)].push_back({x, y});
    }
  }
  return groups;
}

bool adjacent(Cell a, Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y) == 1; }

std::vector<Swap> available_moves(const Board& board) {
  std::vector<Swap> moves;
  Board scratch = board;
  for_each_adjacent_pair(board, [&](Swap s) {
    scratch.swap_cells(s.a, s.b);
    if (has_match(scratch)) moves.push_back(s);
    scratch.swap_cells(s.a, s.b);
    return true;
  });
  return moves;
}

int total(const ColorCounts& counts) { return std::accumulate(counts.begin(), counts.end(), 0); }

int group_score(std::size_t group_size) {
  const int n = static_cast<int>(group_size);
  return kPointsPerPiece * n + kBonusPerExtraPiece * std::max(0, n - 3);
}

void collapse_and_refill(Board& board, const RefillFn& refill) {
  for (int x = 0; x < board.width(); ++x) {
    int write = board.height() - 1;
    for (int y = board.height() - 1; y >= 0; --y) {
      const Color c = board.at({x, y});
      if (c == kEmpty) continue;
      board.set({x, write}, c);
      --write;
    }
    for (int y = 0; y <= write; ++y) board.set({x, y}, refill(Cell{x, y}));
  }
}

SettleResult settle(Board board, const RefillFn& refill) {
  SettleResult result;
  // Empty cells left by a booster are filled before looking for matches.
  if (board.filled_count() != board.width() * board.height()) collapse_and_refill(board, refill);
  for (;;) {
    const auto groups = find_matches(board);
    if (groups.empty()) break;
    if (result.cascades >= kMaxCascades) throw std::runtime_error("settle did not reach a fixpoint");
    ++result.cascades;
    for (const auto& group : groups) {
      result.score_delta += group_score(group.size());
      for (const Cell c : group) {
        ++result.cleared[static_cast<std::size_t>(board.at(c))];
        board.set(c, kEmpty);
      }
    }
    collapse_and_refill(board, refill);
  }
  result.board = std::move(board);
  return result;
}

SettleResult settle(Board board, int palette_size, Rng& rng) {
  if (palette_size < 1 || palette_size > kMaxColors) throw std::invalid_argument("palette size out of range");
  return settle(std::move(board), [&](Cell) { return static_cast<Color>(rng.uniform_int(0, palette_size - 1)); });
}

Board fill_playable_board(int width, int height, int palette_size, Rng& rng) {
  if (palette_size < 1 || palette_size > kMaxColors) throw std::invalid_argument("palette size out of range");
  Board board(width, height);
  std::vector<Color> allowed;
  for (int attempt = 0; attempt < kFillAttempts; ++attempt) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        allowed.clear();
        for (Color c = 0; c < palette_size; ++c) {
          const bool left_run = x >= 2 && board.at({x - 1, y}) == c && board.at({x - 2, y}) == c;
          const bool up_run = y >= 2 && board.at({x, y - 1}) == c && board.at({x, y - 2}) == c;
          if (!left_run && !up_run) allowed.push_back(c);
        }
        if (allowed.empty()) {
          board.set({x, y}, static_cast<Color>(rng.uniform_int(0, palette_size - 1)));
        } else {
          board.set({x, y}, allowed[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(allowed.size()) - 1))]);
        }
      }
    }
    if (playable(board)) return board;
  }
  throw std::runtime_error("could not deal a playable board");
}

Board resolve_deadlock(Board board, int palette_size, Rng& rng) {
  if (playable(board)) return board;
  auto cells = board.cells();
  for (int attempt = 0; attempt < kReshuffleAttempts; ++attempt) {
    std::shuffle(cells.begin(), cells.end(), rng.engine());
    if (playable(board)) return board;
  }
  return fill_playable_board(board.width(), board.height(), palette_size, rng);
}

std::string_view to_string(MoveKind kind) {
  switch (kind) {
    case MoveKind::Committed: return "committed";
    case MoveKind::Reverted: return "reverted";
    case MoveKind::Illegal: return "illegal";
  }
  return "?";
}

std::string_view to_string(LevelStatus status) {
  switch (status) {
    case LevelStatus::InProgress: return "in_progress";
    case LevelStatus::Completed: return "completed";
    case LevelStatus::Failed: return "failed";
  }
  return "?";
}

LevelState start_level(const LevelParams& params, Board board, std::vector<Color> goal_colors) {
  if (board.width() != params.board_width || board.height() != params.board_height) {
    throw std::invalid_argument("board size does not match level parameters");
  }
  if (goal_colors.size() != params.collection_goals.size()) {
    throw std::invalid_argument("one goal color is required per collection goal");
  }
  LevelState state;
  state.board = std::move(board);
  state.params = params;
  state.goal_colors = std::move(goal_colors);
  state.collection_progress.assign(state.goal_colors.size(), 0);
  state.moves_left = params.num_moves;
  return state;
}

std::pair<LevelState, MoveOutcome> apply_move(const LevelState& state, Swap swap, Rng& rng) {
  check_bounds(state.board, swap.a);
  check_bounds(state.board, swap.b);
  if (level_status(state) != LevelStatus::InProgress) throw LevelFinished();

  LevelState next = state;
  MoveOutcome out;
  next.clicks += 2;
  if (!adjacent(swap.a, swap.b)) {
    out.kind = MoveKind::Illegal;
    return {std::move(next), out};
  }

  next.board.swap_cells(swap.a, swap.b);
  if (!has_match(next.board)) {
    next.board = state.board;
    ++next.failed_moves;
    out.kind = MoveKind::Reverted;
    return {std::move(next), out};
  }

  const int palette = state.params.num_different_pieces;
  auto settled = settle(std::move(next.board), palette, rng);
  out.kind = MoveKind::Committed;
  merge_settle(out, settled);
  next.board = resolve_deadlock(std::move(settled.board), palette, rng);
  next.score += out.score_delta;
  add_clears(next, out.cleared);
  --next.moves_left;
  return {std::move(next), out};
}

std::vector<Cell> booster_region(const Board& board, Cell cell) {
  std::vector<Cell> region;
  for (int x = cell.x - 1; x <= cell.x + 1; ++x) {
    for (int y = cell.y - 1; y <= cell.y + 1; ++y) {
      if (board.in_bounds({x, y})) region.push_back({x, y});
    }
  }
  return region;
}

std::pair<LevelState, MoveOutcome> use_booster(const LevelState& state, Cell cell, Rng& rng) {
  check_bounds(state.board, cell);
  if (level_status(state) != LevelStatus::InProgress) throw LevelFinished();
  if (state.boosters_used >= kBoosterBudget) throw BoosterBudgetExhausted();

  LevelState next = state;
  MoveOutcome out;
  out.kind = MoveKind::Committed;
  for (const Cell c : booster_region(next.board, cell)) {
    ++out.cleared[static_cast<std::size_t>(next.board.at(c))];
    next.board.set(c, kEmpty);
  }
  out.score_delta = kPointsPerPiece * total(out.cleared);

  const int palette = state.params.num_different_pieces;
  auto settled = settle(std::move(next.board), palette, rng);
  merge_settle(out, settled);
  next.board = resolve_deadlock(std::move(settled.board), palette, rng);
  next.score += out.score_delta;
  add_clears(next, out.cleared);
  ++next.boosters_used;
  ++next.clicks;
  return {std::move(next), out};
}

LevelStatus level_status(const LevelState& state) {
  bool goals_met = state.score >= state.params.score_goal;
  for (std::size_t i = 0; i < state.params.collection_goals.size() && goals_met; ++i) {
    goals_met = state.collection_progress[i] >= state.params.collection_goals[i];
  }
  if (goals_met) return LevelStatus::Completed;
  if (state.moves_left <= 0) return LevelStatus::Failed;
  return LevelStatus::InProgress;
}

}  // namespace m3pcg
