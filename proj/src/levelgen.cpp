#include "m3pcg/levelgen.hpp"

#include <algorithm>
#include <numeric>

namespace m3pcg {
namespace {

void check_range(const IntRange& r, const char* name, int floor) {
  if (r.min > r.max) throw std::invalid_argument(std::string(name) + " range is inverted");
  if (r.min < floor) throw std::invalid_argument(std::string(name) + " range is below " + std::to_string(floor));
}

std::string structural_problem(const LevelParams& p) {
  if (p.num_different_pieces <= 0) return "num_different_pieces must be positive";
  if (p.score_goal <= 0) return "score_goal must be positive";
  if (p.board_width <= 0) return "board_width must be positive";
  if (p.board_height <= 0) return "board_height must be positive";
  if (p.num_moves <= 0) return "num_moves must be positive";
  if (p.collection_goals.empty()) return "collection_goals must not be empty";
  for (int g : p.collection_goals) {
    if (g <= 0) return "collection goals must be positive";
  }
  return {};
}

}  // namespace

std::string to_string(const IntRange& r) {
  return "[" + std::to_string(r.min) + "," + std::to_string(r.max) + "]";
}

void ParamRanges::check() const {
  check_range(pieces, "pieces", 1);
  check_range(score_goal, "score_goal", 1);
  check_range(board_width, "board_width", 3);
  check_range(board_height, "board_height", 3);
  check_range(num_moves, "num_moves", 1);
  check_range(goal_count, "goal_count", 1);
  check_range(goal_amount, "goal_amount", 1);
  if (pieces.max > kMaxColors) throw std::invalid_argument("pieces range exceeds the color palette");
  if (goal_count.min > pieces.min) {
    throw std::invalid_argument("goal_count minimum exceeds the smallest palette");
  }
}

void to_json(nlohmann::json& j, const ParamRanges& r) {
  auto pair = [](const IntRange& x) { return nlohmann::json::array({x.min, x.max}); };
  j = nlohmann::json{{"num_different_pieces", pair(r.pieces)}, {"score_goal", pair(r.score_goal)},
                     {"board_width", pair(r.board_width)},     {"board_height", pair(r.board_height)},
                     {"num_moves", pair(r.num_moves)},         {"goal_count", pair(r.goal_count)},
                     {"goal_amount", pair(r.goal_amount)}};
}

void from_json(const nlohmann::json& j, ParamRanges& r) {
  auto read = [&j](const char* key, IntRange& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    out = IntRange{v.at(0).get<int>(), v.at(1).get<int>()};
  };
  read("num_different_pieces", r.pieces);
  read("score_goal", r.score_goal);
  read("board_width", r.board_width);
  read("board_height", r.board_height);
  read("num_moves", r.num_moves);
  read("goal_count", r.goal_count);
  read("goal_amount", r.goal_amount);
}

std::string_view to_string(ValidationAction action) {
  switch (action) {
    case ValidationAction::Accepted: return "accepted";
    case ValidationAction::Clamped: return "clamped";
    case ValidationAction::Rejected: return "rejected";
  }
  return "?";
}

ValidatedLevel validate(const LevelParams& params, const ParamRanges& ranges, ValidationPolicy policy) {
  ValidatedLevel out{params, {}};
  ValidationReport& report = out.report;

  report.structural_error = structural_problem(params);
  if (!report.structural_error.empty()) {
    report.action = ValidationAction::Rejected;
    return out;
  }

  auto scalar = [&](const char* field, int value, const IntRange& bound) {
    if (!bound.contains(value)) report.violations.push_back({field, value, bound});
  };
  scalar("num_different_pieces", params.num_different_pieces, ranges.pieces);
  scalar("score_goal", params.score_goal, ranges.score_goal);
  scalar("board_width", params.board_width, ranges.board_width);
  scalar("board_height", params.board_height, ranges.board_height);
  scalar("num_moves", params.num_moves, ranges.num_moves);

  // More goals than colors cannot be assigned distinct colors.
  const int clamped_pieces = ranges.pieces.clamp(params.num_different_pieces);
  const IntRange count_bound{ranges.goal_count.min, std::min(ranges.goal_count.max, clamped_pieces)};
  scalar("collection_goals.size", static_cast<int>(params.collection_goals.size()), count_bound);
  for (std::size_t i = 0; i < params.collection_goals.size(); ++i) {
    const std::string field = "collection_goals[" + std::to_string(i) + "]";
    if (!ranges.goal_amount.contains(params.collection_goals[i])) {
      report.violations.push_back({field, params.collection_goals[i], ranges.goal_amount});
    }
  }

  if (report.violations.empty()) {
    report.action = ValidationAction::Accepted;
    return out;
  }
  if (policy == ValidationPolicy::Strict) {
    report.action = ValidationAction::Rejected;
    return out;
  }

  LevelParams& p = out.params;
  p.num_different_pieces = clamped_pieces;
  p.score_goal = ranges.score_goal.clamp(p.score_goal);
  p.board_width = ranges.board_width.clamp(p.board_width);
  p.board_height = ranges.board_height.clamp(p.board_height);
  p.num_moves = ranges.num_moves.clamp(p.num_moves);
  const auto goal_count = static_cast<std::size_t>(count_bound.clamp(static_cast<int>(p.collection_goals.size())));
  p.collection_goals.resize(goal_count, ranges.goal_amount.min);
  for (int& g : p.collection_goals) g = ranges.goal_amount.clamp(g);
  report.action = ValidationAction::Clamped;
  return out;
}

LevelParams generate_traditional(Rng& rng, const ParamRanges& ranges) {
  auto draw = [&rng](const IntRange& r) { return rng.uniform_int(r.min, r.max); };
  LevelParams p;
  p.num_different_pieces = draw(ranges.pieces);
  p.score_goal = draw(ranges.score_goal);
  p.board_width = draw(ranges.board_width);
  p.board_height = draw(ranges.board_height);
  p.num_moves = draw(ranges.num_moves);
  const int goals = std::min(draw(ranges.goal_count), p.num_different_pieces);
  p.collection_goals.resize(static_cast<std::size_t>(goals));
  for (int& g : p.collection_goals) g = draw(ranges.goal_amount);
  return p;
}

std::vector<LevelParams> generate_traditional_batch(Rng& rng, const ParamRanges& ranges) {
  std::vector<LevelParams> batch;
  batch.reserve(kBatchSize);
  for (std::size_t i = 0; i < kBatchSize; ++i) batch.push_back(generate_traditional(rng, ranges));
  return batch;
}

LevelInstance instantiate(const LevelParams& params, Rng& rng) {
  const std::string problem = structural_problem(params);
  if (!problem.empty()) throw std::invalid_argument(problem);
  if (params.num_different_pieces > kMaxColors) throw std::invalid_argument("too many piece colors");
  if (params.collection_goals.size() > static_cast<std::size_t>(params.num_different_pieces)) {
    throw std::invalid_argument("more collection goals than piece colors");
  }

  LevelInstance level;
  level.board = fill_playable_board(params.board_width, params.board_height, params.num_different_pieces, rng);

  std::vector<Color> palette(static_cast<std::size_t>(params.num_different_pieces));
  std::iota(palette.begin(), palette.end(), Color{0});
  std::shuffle(palette.begin(), palette.end(), rng.engine());
  palette.resize(params.collection_goals.size());
  level.goal_colors = std::move(palette);
  return level;
}

std::vector<LevelParams> parse_level_batch(const nlohmann::json& j) {
  if (!j.is_array()) throw MalformedBatch("level batch must be a JSON array");
  std::vector<LevelParams> levels;
  try {
    for (const auto& item : j) levels.push_back(item.get<LevelParams>());
  } catch (const nlohmann::json::exception& e) {
    throw MalformedBatch(std::string("malformed level object: ") + e.what());
  }
  return levels;
}

nlohmann::json level_batch_to_json(std::span<const LevelParams> levels) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : levels) j.push_back(p);
  return j;
}

}  // namespace m3pcg
