#include "m3pcg/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace m3pcg {
namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

nlohmann::json beta_json(const bayes::BetaPosterior& p) {
  return {{"alpha", p.alpha}, {"beta", p.beta}, {"mean", p.mean()}};
}

nlohmann::json counts_json(const CompletionCounts& c) {
  return {{"started", c.started}, {"completed", c.completed}};
}

// Adds the Monte Carlo statement and records both estimators in the summary.
void compare(AnalysisReport& report, const std::string& key, const std::string& claim, const CompletionCounts& llm,
             const CompletionCounts& trad, const AnalysisOptions& options) {
  const auto a = bayes::bernoulli_posterior(llm.completed, llm.started);
  const auto b = bayes::bernoulli_posterior(trad.completed, trad.started);
  const auto mc = bayes::prob_greater(a, b, options.monte_carlo);
  const auto grid = bayes::prob_greater(a, b, options.grid);
  report.posterior_summary[key] = {{"llm", beta_json(a)},
                                   {"traditional", beta_json(b)},
                                   {"monte_carlo", {{"p", mc.p}, {"mcse", mc.error}, {"draws", options.monte_carlo.draws}}},
                                   {"numeric_integration", {{"p", grid.p}, {"error", grid.error}}}};
  report.prob_statements.push_back({claim, mc.p, mc.error});
}

}  // namespace

std::string_view to_string(AnalysisModel model) {
  switch (model) {
    case AnalysisModel::Completion: return "completion";
    case AnalysisModel::Ratings: return "ratings";
    case AnalysisModel::RatingsWithDropouts: return "ratings-with-dropouts";
  }
  return "?";
}

std::optional<AnalysisModel> parse_analysis_model(std::string_view text) {
  for (auto m : {AnalysisModel::Completion, AnalysisModel::Ratings, AnalysisModel::RatingsWithDropouts}) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

nlohmann::json AnalysisReport::to_json() const {
  nlohmann::json statements = nlohmann::json::array();
  for (const auto& s : prob_statements) statements.push_back({{"claim", s.claim}, {"p", s.p}, {"mcse", s.mcse}});
  nlohmann::json j = {{"model", to_string(model)},
                      {"groups", {"llm", "traditional"}},
                      {"counts", counts},
                      {"posterior_summary", posterior_summary},
                      {"prob_statements", statements}};
  if (!notes.empty()) j["notes"] = notes;
  return j;
}

std::string AnalysisReport::to_text() const {
  std::ostringstream out;
  out << "model: " << to_string(model) << '\n';
  for (const char* g : {"llm", "traditional"}) {
    if (counts.contains(g)) out << "  " << g << ": " << counts.at(g).dump() << '\n';
  }
  std::size_t width = 5;
  for (const auto& s : prob_statements) width = std::max(width, s.claim.size());
  out << '\n' << std::string(width, ' ') << "        p      mcse\n";
  for (const auto& s : prob_statements) {
    out << s.claim << std::string(width - s.claim.size(), ' ') << "  " << fixed(s.p, 4) << "  " << fixed(s.mcse, 4)
        << '\n';
  }
  for (const auto& n : notes) out << "note: " << n << '\n';
  return out.str();
}

std::vector<ExportRow> load_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  if (path.extension() == ".csv") return parse_export_csv(in);
  if (path.extension() == ".jsonl") {
    TelemetryStore store;
    store.replay_log(in);
    return store.export_dataset();
  }
  throw std::invalid_argument("input must be a .csv export or a .jsonl event log");
}

AnalysisReport analyze_completion(const CompletionCounts& llm, const CompletionCounts& traditional,
                                  const std::optional<std::pair<CompletionCounts, CompletionCounts>>& first_level,
                                  const AnalysisOptions& options) {
  AnalysisReport report;
  report.model = AnalysisModel::Completion;
  report.counts = {{"llm", counts_json(llm)}, {"traditional", counts_json(traditional)}};
  compare(report, "all_levels", "completion rate llm > traditional (all levels)", llm, traditional, options);
  if (first_level) {
    report.counts["first_level"] = {{"llm", counts_json(first_level->first)},
                                    {"traditional", counts_json(first_level->second)}};
    compare(report, "first_level", "completion rate llm > traditional (first level)", first_level->first,
            first_level->second, options);
    const auto& s = report.prob_statements.back();
    if (options.first_level_reference) {
      const double ref = *options.first_level_reference;
      const double tolerance = 3.0 * std::max(s.mcse, 1.0 / static_cast<double>(options.monte_carlo.draws));
      const bool differs = std::abs(s.p - ref) > tolerance;
      report.posterior_summary["first_level"]["reference"] = {{"p", ref}, {"differs", differs}};
      if (differs) {
        report.notes.push_back("first-level P = " + fixed(s.p, 3) + " differs from the reference value " +
                               fixed(ref, 2) + " by more than 3 MCSE");
      }
    }
  }
  return report;
}

bayes::RatingsDataset ratings_dataset(std::span<const ExportRow> rows, bool with_dropouts) {
  bayes::RatingsDataset data;
  data.min_category = with_dropouts ? 0 : 1;
  data.max_category = 5;
  for (const auto& r : rows) {
    int y;
    if (r.completed) {
      if (!r.rating || *r.rating < 1) continue;  // completed but never rated
      y = *r.rating;
    } else {
      if (!with_dropouts) continue;
      y = 0;
    }
    data.y.push_back(y);
    data.x.push_back(r.group == Group::LlmPcg ? 1 : 0);
  }
  return data;
}

AnalysisReport analyze(std::span<const ExportRow> rows, AnalysisModel model, const AnalysisOptions& options) {
  if (model == AnalysisModel::Completion) {
    CompletionCounts llm, trad, llm1, trad1;
    for (const auto& r : rows) {
      auto& all = r.group == Group::LlmPcg ? llm : trad;
      auto& first = r.group == Group::LlmPcg ? llm1 : trad1;
      all.started++;
      all.completed += r.completed;
      if (r.level_in_row == 1) {
        first.started++;
        first.completed += r.completed;
      }
    }
    return analyze_completion(llm, trad, std::make_pair(llm1, trad1), options);
  }

  const bool with_dropouts = model == AnalysisModel::RatingsWithDropouts;
  const bayes::RatingsDataset data = ratings_dataset(rows, with_dropouts);
  AnalysisReport report;
  report.model = model;
  for (const int g : {1, 0}) {
    std::vector<long long> hist(static_cast<std::size_t>(data.num_categories()), 0);
    long long n = 0;
    double sum = 0;
    for (std::size_t i = 0; i < data.y.size(); ++i) {
      if (data.x[i] != g) continue;
      hist[static_cast<std::size_t>(data.y[i] - data.min_category)]++;
      sum += data.y[i];
      n++;
    }
    nlohmann::json by_category = nlohmann::json::object();
    for (int k = data.min_category; k <= data.max_category; ++k) {
      by_category[std::to_string(k)] = hist[static_cast<std::size_t>(k - data.min_category)];
    }
    report.counts[g == 1 ? "llm" : "traditional"] = {
        {"n", n}, {"mean", n > 0 ? sum / static_cast<double>(n) : 0.0}, {"by_category", by_category}};
  }

  const auto post = bayes::fit_ordered_logistic(data, options.sampler);
  nlohmann::json cut_means = nlohmann::json::array();
  if (!post.cutpoint_samples.empty()) {
    const std::size_t k = post.cutpoint_samples.front().size();
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0;
      for (const auto& c : post.cutpoint_samples) s += c[j];
      cut_means.push_back(s / static_cast<double>(post.cutpoint_samples.size()));
    }
  }
  report.posterior_summary = {{"beta_mean", post.beta_mean},
                              {"beta_sd", post.beta_sd},
                              {"cutpoint_means", cut_means},
                              {"chains", post.chains},
                              {"draws", post.beta_samples.size()},
                              {"acceptance_rate", post.acceptance_rate},
                              {"prior", "beta ~ Cauchy(0, " + fixed(options.sampler.prior_scale, 1) + ")"}};
  const std::string what = with_dropouts ? "ratings with dropouts as 0" : "ratings";
  report.prob_statements.push_back({what + ": llm > traditional (beta > 0)", post.beta_positive.p, post.beta_positive.mcse});
  report.prob_statements.push_back({what + ": llm < traditional (beta < 0)", post.beta_negative.p, post.beta_negative.mcse});
  return report;
}

}  // namespace m3pcg
