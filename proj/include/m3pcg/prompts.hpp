#pragma once

#include <span>
#include <string>
#include <vector>

#include "m3pcg/gameplay_record.hpp"

namespace m3pcg {

// At most this many of the most recent records are described to the model.
inline constexpr std::size_t kMaxHistoryRecords = 5;

// One sentence block per record, oldest first, separated by blank lines.
// Throws std::invalid_argument on an empty history.
std::string build_history_prompt(std::span<const GameplayRecord> records);

std::string history_paragraph(const GameplayRecord& record);

// Five-step task, player types and per-parameter guidance.
const std::string& build_instruction_prompt();

// Cold-open instruction for a player with no completed level.
const std::string& build_first_levels_prompt();

// Recovers the records described by a history prompt. Collection goals are not
// part of the prompt and come back empty.
std::vector<GameplayRecord> parse_history_prompt(const std::string& text);

}  // namespace m3pcg
