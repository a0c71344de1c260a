#pragma once

// Structured-output level generation: request construction, the provider-neutral
// client interface, response parsing and the retry/fallback contract.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "m3pcg/gameplay_record.hpp"
#include "m3pcg/levelgen.hpp"

namespace m3pcg {

inline constexpr int kDefaultRetries = 2;
inline constexpr const char* kLevelFunctionName = "suggest_levels";

enum class PlayerType { NotSoSkilled, Casual, Great };

// "not so skilled player", "casual player", "great player".
std::string_view to_string(PlayerType type);
// Lenient: ignores case, underscores and a trailing "player".
std::optional<PlayerType> parse_player_type(std::string_view text);

struct LlmRequest {
  std::string instruction_text;
  std::string history_text;  // empty for the cold-open request
  nlohmann::json function_schema;
  double temperature = 0.0;
};

// JSON Schema for the function-call arguments: player_type, reasoning and
// exactly three level objects.
nlohmann::json level_function_schema(const ParamRanges& ranges = {});

// Uses at most the kMaxHistoryRecords most recent records.
LlmRequest make_history_request(std::span<const GameplayRecord> records, const ParamRanges& ranges = {});
LlmRequest make_first_levels_request(const ParamRanges& ranges = {});

struct GenerationResult {
  std::vector<LevelParams> levels;  // exactly kBatchSize, post-Clamp
  PlayerType player_type = PlayerType::Casual;
  std::string reasoning;
  std::string raw_response;
  std::vector<ValidationReport> reports;  // one per level, pre-clamp violations
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  // Returns the function-call argument JSON as text.
  virtual std::string complete(const LlmRequest& request) = 0;
  virtual bool is_mock() const { return false; }
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedResponse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FallbackRequired : public std::runtime_error {
 public:
  FallbackRequired(int attempts, const std::string& last_error)
      : std::runtime_error("level generation failed after " + std::to_string(attempts) +
                           " attempts: " + last_error),
        attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

// Accepts either the function-call object or a bare level array (the latter is
// read as a casual-player answer with no reasoning). Throws MalformedResponse.
GenerationResult parse_generation_response(const std::string& raw, const ParamRanges& ranges);

// One call plus up to `retries` more on transport or parse failure; then throws
// FallbackRequired.
GenerationResult request_levels(LlmClient& client, const LlmRequest& request, const ParamRanges& ranges,
                                int retries = kDefaultRetries);

}  // namespace m3pcg
