#pragma once

// Experiment reports over an exported run table.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "m3pcg/bayes.hpp"
#include "m3pcg/telemetry.hpp"

namespace m3pcg {

enum class AnalysisModel { Completion, Ratings, RatingsWithDropouts };
std::string_view to_string(AnalysisModel model);
std::optional<AnalysisModel> parse_analysis_model(std::string_view text);

struct AnalysisOptions {
  bayes::MonteCarlo monte_carlo;
  bayes::NumericIntegration grid;
  bayes::SamplerConfig sampler;
  // When set, the first-level completion statement is compared against it and
  // a note is added if they differ by more than 3 MCSE.
  std::optional<double> first_level_reference;
};

struct CompletionCounts {
  long long started = 0;
  long long completed = 0;
};

struct AnalysisReport {
  AnalysisModel model = AnalysisModel::Completion;
  nlohmann::json counts;
  nlohmann::json posterior_summary;
  std::vector<bayes::ProbStatement> prob_statements;
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Rows from a CSV export or an events.jsonl log (terminal runs only).
std::vector<ExportRow> load_rows(const std::filesystem::path& path);

AnalysisReport analyze(std::span<const ExportRow> rows, AnalysisModel model, const AnalysisOptions& options = {});

// Completion comparison from bare counts (llm vs traditional).
AnalysisReport analyze_completion(const CompletionCounts& llm, const CompletionCounts& traditional,
                                  const std::optional<std::pair<CompletionCounts, CompletionCounts>>& first_level,
                                  const AnalysisOptions& options = {});

// Ordinal data for the ratings models: completed-and-rated runs only, or every
// terminal run with dropouts as category 0.
bayes::RatingsDataset ratings_dataset(std::span<const ExportRow> rows, bool with_dropouts);

}  // namespace m3pcg
