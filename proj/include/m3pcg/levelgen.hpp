#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "m3pcg/engine.hpp"
#include "m3pcg/level_params.hpp"
#include "m3pcg/rng.hpp"

namespace m3pcg {

inline constexpr std::size_t kBatchSize = 3;

struct IntRange {
  int min = 0;
  int max = 0;
  bool contains(int v) const { return v >= min && v <= max; }
  int clamp(int v) const { return v < min ? min : (v > max ? max : v); }
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

std::string to_string(const IntRange& r);

// Inclusive bounds for every level parameter. Defaults are the experiment ranges.
struct ParamRanges {
  IntRange pieces{3, 5};
  IntRange score_goal{700, 2000};
  IntRange board_width{4, 6};
  IntRange board_height{4, 6};
  IntRange num_moves{20, 30};
  IntRange goal_count{2, 4};
  IntRange goal_amount{5, 15};

  // Throws std::invalid_argument when a range is inverted or cannot host a level.
  void check() const;
};

void to_json(nlohmann::json& j, const ParamRanges& r);
void from_json(const nlohmann::json& j, ParamRanges& r);

enum class ValidationPolicy { Strict, Clamp };
enum class ValidationAction { Accepted, Clamped, Rejected };

std::string_view to_string(ValidationAction action);

struct Violation {
  std::string field;  // e.g. "num_moves", "collection_goals[2]", "collection_goals.size"
  long long value = 0;
  IntRange bound;
};

struct ValidationReport {
  std::vector<Violation> violations;
  ValidationAction action = ValidationAction::Accepted;
  std::string structural_error;  // set when the params are not a level at all
};

struct ValidatedLevel {
  LevelParams params;
  ValidationReport report;
};

// Strict rejects on any violation. Clamp pulls scalars to the nearest bound,
// truncates or pads the goal list and clamps each goal. Structurally malformed
// params (non-positive counts, empty goal list) are rejected under both policies.
ValidatedLevel validate(const LevelParams& params, const ParamRanges& ranges, ValidationPolicy policy);

// Uniform, independent draw per field; goal count is capped at the piece count.
LevelParams generate_traditional(Rng& rng, const ParamRanges& ranges);

std::vector<LevelParams> generate_traditional_batch(Rng& rng, const ParamRanges& ranges);

struct LevelInstance {
  Board board;
  std::vector<Color> goal_colors;  // distinct, one per collection goal
};

// Deals a playable board and assigns goal colors as a random subset of the palette.
LevelInstance instantiate(const LevelParams& params, Rng& rng);

class MalformedBatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Level-batch wire format: a JSON array of level objects.
std::vector<LevelParams> parse_level_batch(const nlohmann::json& j);
nlohmann::json level_batch_to_json(std::span<const LevelParams> levels);

}  // namespace m3pcg
