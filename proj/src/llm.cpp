#include "m3pcg/llm.hpp"

#include <algorithm>
#include <cctype>

#include "m3pcg/prompts.hpp"

namespace m3pcg {
namespace {

std::string normalize(std::string_view text) {
  std::string out;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (ch == '_' || ch == '-') {
      out.push_back(' ');
    } else {
      out.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  const auto first = out.find_first_not_of(' ');
  const auto last = out.find_last_not_of(' ');
  if (first == std::string::npos) return {};
  out = out.substr(first, last - first + 1);
  constexpr std::string_view suffix = " player";
  if (out.size() > suffix.size() && out.ends_with(suffix)) out.resize(out.size() - suffix.size());
  return out;
}

nlohmann::json int_property(const IntRange& r, const char* description) {
  return {{"type", "integer"}, {"minimum", r.min}, {"maximum", r.max}, {"description", description}};
}

}  // namespace

std::string_view to_string(PlayerType type) {
  switch (type) {
    case PlayerType::NotSoSkilled: return "not so skilled player";
    case PlayerType::Casual: return "casual player";
    case PlayerType::Great: return "great player";
  }
  return "?";
}

std::optional<PlayerType> parse_player_type(std::string_view text) {
  const std::string key = normalize(text);
  if (key == "not so skilled" || key == "notsoskilled") return PlayerType::NotSoSkilled;
  if (key == "casual") return PlayerType::Casual;
  if (key == "great") return PlayerType::Great;
  return std::nullopt;
}

nlohmann::json level_function_schema(const ParamRanges& ranges) {
  nlohmann::json level = {
      {"type", "object"},
      {"properties",
       {
           {"level_number", {{"type", "integer"}, {"description", "A number of the current level."}}},
           {"num_different_pieces",
            int_property(ranges.pieces, "More different pieces, harder the game.")},
           {"score_goal", int_property(ranges.score_goal,
                                       "The score a user must reach before completing the level. The score "
                                       "should be divisable by 3.")},
           {"board_width", int_property(ranges.board_width, "How wide the board is. Wider is harder.")},
           {"board_height", int_property(ranges.board_height,
                                         "Height of the board. Higher is harder. Should be very similar to "
                                         "board-width.")},
           {"num_moves", int_property(ranges.num_moves,
                                      "Amount of moves a user has to complete the game. Harder levels need "
                                      "more moves: consider collection_goals.")},
           {"collection_goals",
            {{"type", "array"},
             {"minItems", ranges.goal_count.min},
             {"maxItems", ranges.goal_count.max},
             {"items", int_property(ranges.goal_amount, "Pieces of one color to collect.")},
             {"description",
              "To finish the level, you need to collect a certain number of pieces with a specific color."}}},
       }},
      {"required",
       {"num_different_pieces", "score_goal", "board_width", "board_height", "num_moves", "collection_goals"}},
  };
  return {
      {"type", "object"},
      {"properties",
       {
           {"player_type",
            {{"type", "string"},
             {"enum", {"not so skilled player", "casual player", "great player"}},
             {"description", "What type of player we are dealing with."}}},
           {"reasoning",
            {{"type", "string"}, {"description", "Your reasoning for the type of gamer and next 3 levels."}}},
           {"levels",
            {{"type", "array"},
             {"minItems", kBatchSize},
             {"maxItems", kBatchSize},
             {"items", level},
             {"description", "The next 3 levels for this player."}}},
       }},
      {"required", {"player_type", "reasoning", "levels"}},
  };
}

LlmRequest make_history_request(std::span<const GameplayRecord> records, const ParamRanges& ranges) {
  return {build_instruction_prompt(), build_history_prompt(records), level_function_schema(ranges), 0.0};
}

LlmRequest make_first_levels_request(const ParamRanges& ranges) {
  return {build_first_levels_prompt(), "", level_function_schema(ranges), 0.0};
}

GenerationResult parse_generation_response(const std::string& raw, const ParamRanges& ranges) {
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedResponse(std::string("response is not JSON: ") + e.what());
  }

  GenerationResult result;
  result.raw_response = raw;
  nlohmann::json levels;
  if (body.is_array()) {
    levels = body;
  } else if (body.is_object()) {
    if (!body.contains("levels")) throw MalformedResponse("response has no \"levels\" field");
    levels = body.at("levels");
    if (!body.contains("player_type") || !body.at("player_type").is_string()) {
      throw MalformedResponse("response has no player_type string");
    }
    const auto type = parse_player_type(body.at("player_type").get<std::string>());
    if (!type) throw MalformedResponse("unknown player_type " + body.at("player_type").dump());
    result.player_type = *type;
    if (body.contains("reasoning") && body.at("reasoning").is_string()) {
      result.reasoning = body.at("reasoning").get<std::string>();
    }
  } else {
    throw MalformedResponse("response must be a JSON object or array");
  }

  std::vector<LevelParams> parsed;
  try {
    parsed = parse_level_batch(levels);
  } catch (const MalformedBatch& e) {
    throw MalformedResponse(e.what());
  }
  if (parsed.size() != kBatchSize) {
    throw MalformedResponse("expected " + std::to_string(kBatchSize) + " levels, got " +
                            std::to_string(parsed.size()));
  }
  for (const auto& level : parsed) {
    auto checked = validate(level, ranges, ValidationPolicy::Clamp);
    if (checked.report.action == ValidationAction::Rejected) {
      throw MalformedResponse("level rejected: " + checked.report.structural_error);
    }
    result.levels.push_back(std::move(checked.params));
    result.reports.push_back(std::move(checked.report));
  }
  return result;
}

GenerationResult request_levels(LlmClient& client, const LlmRequest& request, const ParamRanges& ranges,
                                int retries) {
  std::string last_error;
  const int attempts = 1 + std::max(0, retries);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    try {
      return parse_generation_response(client.complete(request), ranges);
    } catch (const TransportError& e) {
      last_error = e.what();
    } catch (const MalformedResponse& e) {
      last_error = e.what();
    }
  }
  throw FallbackRequired(attempts, last_error);
}

}  // namespace m3pcg
