// One line per acceptance criterion; exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "m3pcg/analysis.hpp"
#include "m3pcg/bayes.hpp"
#include "m3pcg/engine.hpp"
#include "m3pcg/levelgen.hpp"
#include "m3pcg/llm.hpp"
#include "m3pcg/prompts.hpp"
#include "match_oracle.hpp"
#include "test_support.hpp"

using namespace m3pcg;
namespace b = m3pcg::bayes;

namespace {

// Tolerances and budgets, fixed here so they cannot drift.
constexpr double kRateTolerance = 0.01;
constexpr double kNearCertain = 0.999;
constexpr long long kMcDraws = 100'000;
constexpr double kAgreementSigmas = 3.0;
constexpr double kRecoveryTolerance = 0.2;
constexpr double kRecoveryConfidence = 0.99;
constexpr double kNullLow = 0.4, kNullHigh = 0.6;
constexpr double kMaxMcse = 0.01;
constexpr double kDirectional = 0.9;
constexpr double kFirstLevelReference = 1.00;
constexpr std::size_t kMaxParagraphs = 5;
constexpr int kRandomMoves = 10'000;

constexpr double kConjugateBudgetMs = 1.0;
constexpr double kComparisonBudgetMs = 1000.0;
constexpr double kOrderedLogitBudgetMs = 60'000.0;
constexpr double kEngineBudgetMs = 60'000.0;
constexpr double kSimulationBudgetMs = 300'000.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string num(double v, int digits = 4) {
  std::ostringstream out;
  out.precision(digits);
  out << std::fixed << v;
  return out.str();
}

std::string budget(double ms, double limit) { return num(ms, 1) + " ms (limit " + num(limit, 0) + " ms)"; }

Outcome conjugate_exactness() {
  const auto start = Clock::now();
  const auto llm = b::bernoulli_posterior(267, 486);
  const auto trad = b::bernoulli_posterior(155, 442);
  const double ms = ms_since(start);
  const bool exact = llm.alpha == 268 && llm.beta == 220 && trad.alpha == 156 && trad.beta == 288;
  const bool close = std::abs(llm.mean() - 0.55) <= kRateTolerance && std::abs(trad.mean() - 0.35) <= kRateTolerance;
  return {exact && close && ms < kConjugateBudgetMs,
          "Beta(" + num(llm.alpha, 0) + "," + num(llm.beta, 0) + ") mean " + num(llm.mean(), 3) + ", Beta(" +
              num(trad.alpha, 0) + "," + num(trad.beta, 0) + ") mean " + num(trad.mean(), 3) + ", " +
              budget(ms, kConjugateBudgetMs)};
}

Outcome all_levels_comparison() {
  const auto start = Clock::now();
  const b::BetaPosterior llm{268, 220}, trad{156, 288};
  const auto mc = b::prob_greater(llm, trad, b::MonteCarlo{kMcDraws, 1});
  const auto ni = b::prob_greater(llm, trad, b::NumericIntegration{});
  const double ms = ms_since(start);
  // A p of exactly 1 has zero binomial MCSE; one draw's worth of resolution is the floor.
  const double tol = kAgreementSigmas * std::max(mc.error, 1.0 / kMcDraws);
  const bool pass = mc.p >= kNearCertain && ni.p >= kNearCertain && std::abs(mc.p - ni.p) <= tol &&
                    ms < kComparisonBudgetMs;
  return {pass, "MC " + num(mc.p, 5) + " (MCSE " + num(mc.error, 5) + "), NI " + num(ni.p, 6) + ", " +
                    budget(ms, kComparisonBudgetMs)};
}

Outcome first_level_comparison() {
  const auto start = Clock::now();
  const b::BetaPosterior llm{21, 40}, trad{9, 36};
  const auto mc = b::prob_greater(llm, trad, b::MonteCarlo{kMcDraws, 1});
  const auto ni = b::prob_greater(llm, trad, b::NumericIntegration{});
  AnalysisOptions options;
  options.first_level_reference = kFirstLevelReference;
  const auto report = analyze_completion({486, 267}, {442, 155},
                                         std::make_pair(CompletionCounts{59, 20}, CompletionCounts{43, 8}), options);
  const double ms = ms_since(start);
  const bool agree = std::abs(mc.p - ni.p) <= kAgreementSigmas * mc.error;
  const bool flagged = report.notes.size() == 1;
  return {agree && flagged && ms < kComparisonBudgetMs,
          "MC " + num(mc.p) + " (MCSE " + num(mc.error, 5) + "), NI " + num(ni.p) + ", reference " +
              num(kFirstLevelReference, 2) + (flagged ? " flagged" : " NOT flagged") + ", " +
              budget(ms, kComparisonBudgetMs)};
}

int draw_category(double eta, const std::vector<double>& c, Rng& rng) {
  const double u = rng.uniform01();
  const double latent = eta + std::log(u / (1.0 - u));
  int k = 1;
  for (double cut : c) k += latent > cut ? 1 : 0;
  return k;
}

Outcome ordered_logit_recovery() {
  const auto start = Clock::now();
  const std::vector<double> c{-1, 0, 1, 2};
  Rng rng(2025);
  b::RatingsDataset effect, null;
  for (int group = 0; group < 2; ++group) {
    for (int i = 0; i < 500; ++i) {
      effect.y.push_back(draw_category(group * 1.0, c, rng));
      effect.x.push_back(group);
    }
  }
  std::vector<int> shared;
  for (int i = 0; i < 500; ++i) shared.push_back(draw_category(0.0, c, rng));
  for (int group = 0; group < 2; ++group) {
    for (int y : shared) {
      null.y.push_back(y);
      null.x.push_back(group);
    }
  }
  const auto fit = b::fit_ordered_logistic(effect);
  const auto fit_null = b::fit_ordered_logistic(null);
  const double ms = ms_since(start);
  const double worst_mcse = std::max({fit.beta_positive.mcse, fit.beta_negative.mcse, fit_null.beta_positive.mcse,
                                      fit_null.beta_negative.mcse});
  const bool pass = std::abs(fit.beta_mean - 1.0) <= kRecoveryTolerance && fit.beta_positive.p > kRecoveryConfidence &&
                    fit_null.beta_negative.p >= kNullLow && fit_null.beta_negative.p <= kNullHigh &&
                    worst_mcse < kMaxMcse && ms < kOrderedLogitBudgetMs;
  return {pass, "beta mean " + num(fit.beta_mean, 3) + ", P(beta>0) " + num(fit.beta_positive.p) +
                    ", null P(beta<0) " + num(fit_null.beta_negative.p) + ", max MCSE " + num(worst_mcse, 5) + ", " +
                    budget(ms, kOrderedLogitBudgetMs)};
}

b::RatingsDataset from_counts(const std::map<int, int>& trad, const std::map<int, int>& llm, int min_category) {
  b::RatingsDataset d;
  d.min_category = min_category;
  for (const auto& [group, counts] : {std::pair{0, trad}, std::pair{1, llm}}) {
    for (const auto& [k, n] : counts) {
      for (int i = 0; i < n; ++i) {
        d.y.push_back(k);
        d.x.push_back(group);
      }
    }
  }
  return d;
}

double mean_of(const b::RatingsDataset& d, int group) {
  double s = 0, n = 0;
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    if (d.x[i] == group) {
      s += d.y[i];
      n += 1;
    }
  }
  return s / n;
}

Outcome rating_directions() {
  const auto completed = from_counts({{1, 7}, {2, 6}, {3, 17}, {4, 40}, {5, 85}},
                                     {{1, 18}, {2, 20}, {3, 44}, {4, 81}, {5, 104}}, 1);
  const auto dropouts = from_counts({{0, 311}, {1, 6}, {2, 5}, {3, 14}, {4, 34}, {5, 72}},
                                    {{0, 286}, {1, 14}, {2, 15}, {3, 33}, {4, 61}, {5, 77}}, 0);
  const auto a = b::fit_ordered_logistic(completed);
  const auto d = b::fit_ordered_logistic(dropouts);
  const bool means_match = std::abs(mean_of(completed, 1) - 3.87) < 0.005 &&
                           std::abs(mean_of(completed, 0) - 4.22) < 0.01 &&
                           std::abs(mean_of(dropouts, 1) - 1.59) < 0.005 && std::abs(mean_of(dropouts, 0) - 1.25) < 0.005;
  const bool pass = means_match && a.beta_negative.p >= kDirectional && d.beta_positive.p >= kDirectional;
  return {pass, "completed-only means " + num(mean_of(completed, 1), 2) + " vs " + num(mean_of(completed, 0), 2) +
                    " -> P(beta<0) " + num(a.beta_negative.p) + "; with dropouts " + num(mean_of(dropouts, 1), 2) +
                    " vs " + num(mean_of(dropouts, 0), 2) + " -> P(beta>0) " + num(d.beta_positive.p)};
}

Outcome sample_batch_fidelity() {
  const char* sample = R"([
    {"num_different_pieces": 4, "score_goal": 1500, "board_width": 6, "board_height": 6,
     "num_moves": 30, "collection_goals": [20, 25, 30]},
    {"num_different_pieces": 5, "score_goal": 1800, "board_width": 6, "board_height": 6,
     "num_moves": 35, "collection_goals": [25, 30, 35]},
    {"num_different_pieces": 5, "score_goal": 2000, "board_width": 6, "board_height": 6,
     "num_moves": 40, "collection_goals": [30, 35, 40]}])";
  const std::vector<LevelParams> expected{{4, 1500, 6, 6, 30, {20, 25, 30}},
                                          {5, 1800, 6, 6, 35, {25, 30, 35}},
                                          {5, 2000, 6, 6, 40, {30, 35, 40}}};
  const auto levels = parse_level_batch(nlohmann::json::parse(sample));
  bool parsed = levels == expected;

  int moves_flags = 0, goal_flags = 0, other_flags = 0;
  bool all_rejected = true, clamp_ok = true;
  const ParamRanges ranges;
  for (const auto& level : levels) {
    const auto strict = validate(level, ranges, ValidationPolicy::Strict);
    all_rejected = all_rejected && strict.report.action == ValidationAction::Rejected;
    for (const auto& v : strict.report.violations) {
      if (v.field == "num_moves") {
        ++moves_flags;
      } else if (v.field.rfind("collection_goals[", 0) == 0) {
        ++goal_flags;
      } else {
        ++other_flags;
      }
    }
    const auto clamped = validate(level, ranges, ValidationPolicy::Clamp);
    clamp_ok = clamp_ok && validate(clamped.params, ranges, ValidationPolicy::Strict).report.violations.empty();
  }
  const bool pass = parsed && all_rejected && moves_flags == 2 && goal_flags == 9 && other_flags == 0 && clamp_ok;
  return {pass, std::string(parsed ? "3 levels parsed exactly" : "parse mismatch") + ", strict flags num_moves x" +
                    std::to_string(moves_flags) + " and goals x" + std::to_string(goal_flags) + ", clamp output " +
                    (clamp_ok ? "valid" : "INVALID")};
}

std::size_t paragraphs(const std::string& text) {
  std::size_t n = 0;
  for (auto pos = text.find("For level "); pos != std::string::npos; pos = text.find("For level ", pos + 1)) ++n;
  return n;
}

Outcome prompt_goldens() {
  auto record = [](int level, int score, int goal, int failed, int clicks, int rating) {
    GameplayRecord r;
    r.level_in_row = level;
    r.score = score;
    r.score_goal = goal;
    r.moves_left = 18;
    r.num_moves = 25;
    r.num_failed_moves = failed;
    r.num_clicks_on_board = clicks;
    r.user_rating = rating;
    r.level_params = {3, goal, 4, 4, 25, {5, 5}};
    return r;
  };
  const std::string golden =
      "For level 3, the user scored 1460 where 900 was the minimum to pass. They had 18 moves left out of 25. "
      "They made 3 failed moves. They made 59 clicks on the board. They used 0 boosters. The player rated the level "
      "as 1 out of 5. The level contained 3 different pieces. Board width x height was 4 x 4.\n\n"
      "For level 4, the user scored 1860 where 800 was the minimum to pass. They had 18 moves left out of 25. "
      "They made 0 failed moves. They made 67 clicks on the board. They used 0 boosters. The player rated the level "
      "as 5 out of 5. The level contained 3 different pieces. Board width x height was 4 x 4.";
  const std::vector<GameplayRecord> history{record(3, 1460, 900, 3, 59, 1), record(4, 1860, 800, 0, 67, 5)};
  const bool byte_exact = build_history_prompt(history) == golden;
  const bool first_levels =
      build_first_levels_prompt().find("suggest 3 levels of a game to a player that is completely new to it and "
                                       "starts with level 1") != std::string::npos;
  std::size_t worst = 0;
  std::vector<GameplayRecord> many;
  for (int n = 1; n <= 50; ++n) {
    many.push_back(record(n, 1000, 900, 1, 40, 3));
    worst = std::max(worst, paragraphs(build_history_prompt(many)));
    worst = std::max(worst, paragraphs(make_history_request(many).history_text));
  }
  worst = std::max(worst, paragraphs(make_first_levels_request().instruction_text));
  const bool pass = byte_exact && first_levels && worst <= kMaxParagraphs;
  return {pass, std::string(byte_exact ? "both paragraphs byte-exact" : "paragraph MISMATCH") +
                    ", first-levels sentence " + (first_levels ? "present" : "MISSING") +
                    ", max paragraphs over 1..50 records = " + std::to_string(worst)};
}

Outcome engine_properties() {
  const auto start = Clock::now();
  int mismatches = 0;
  for (int code = 0; code < 19683; ++code) {
    Board board(3, 3);
    int v = code;
    for (int i = 0; i < 9; ++i) {
      board.set({i % 3, i / 3}, static_cast<Color>(v % 3));
      v /= 3;
    }
    if (oracle::as_sets(find_matches(board)) != oracle::match_groups(board)) ++mismatches;
  }

  Rng rng(2024);
  int moves = 0, violations = 0;
  while (moves < kRandomMoves) {
    LevelParams p{rng.uniform_int(3, 5), 2000, rng.uniform_int(4, 6), rng.uniform_int(4, 6), 30, {15, 15}};
    LevelState s = start_level(p, fill_playable_board(p.board_width, p.board_height, p.num_different_pieces, rng),
                               {0, 1});
    while (level_status(s) == LevelStatus::InProgress && moves < kRandomMoves) {
      Swap swap;
      const auto productive = available_moves(s.board);
      if (rng.bernoulli(0.5) && !productive.empty()) {
        swap = productive[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(productive.size()) - 1))];
      } else {
        swap.a = {rng.uniform_int(0, p.board_width - 1), rng.uniform_int(0, p.board_height - 1)};
        swap.b = {std::min(swap.a.x + 1, p.board_width - 1), swap.a.y};
      }
      const auto [next, out] = apply_move(s, swap, rng);
      ++moves;
      if (next.board.filled_count() != p.board_width * p.board_height) ++violations;
      if (oracle::any_match(next.board)) ++violations;
      if (next.score < s.score || next.clicks < s.clicks || next.failed_moves < s.failed_moves) ++violations;
      for (std::size_t i = 0; i < s.collection_progress.size(); ++i) {
        if (next.collection_progress[i] < s.collection_progress[i]) ++violations;
      }
      if (out.kind == MoveKind::Committed && (out.score_delta < 60 || total(out.cleared) < 3)) ++violations;
      if (out.kind != MoveKind::Committed && !(next.board == s.board)) ++violations;
      s = next;
    }
  }
  const double ms = ms_since(start);
  return {mismatches == 0 && violations == 0 && ms < kEngineBudgetMs,
          "19683 boards, " + std::to_string(mismatches) + " oracle mismatches; " + std::to_string(moves) +
              " random moves, " + std::to_string(violations) + " violations; " + budget(ms, kEngineBudgetMs)};
}

Outcome end_to_end() {
  const std::string cli = M3PCG_CLI_PATH;
  testing::TempDir first, second;
  const std::string args = " simulate --players 102 --seed 7 --generator mock --out ";
  const auto start = Clock::now();
  const auto run = testing::run_command(cli + args + "'" + first.path().string() + "' 2>/dev/null");
  const double ms = ms_since(start);
  const auto rerun = testing::run_command(cli + args + "'" + second.path().string() + "' 2>/dev/null");
  if (run.exit_code != 0 || rerun.exit_code != 0) return {false, "simulate exited non-zero"};

  const std::string log = testing::slurp(first.path() / "events.jsonl");
  const bool identical = !log.empty() && log == testing::slurp(second.path() / "events.jsonl");

  // Each llm-group completion must be followed by a 3-level batch built from that history.
  std::map<std::string, std::string> group;
  std::map<std::string, std::size_t> completions;
  std::map<std::string, std::vector<std::size_t>> generated;
  bool batches_ok = true;
  std::istringstream lines(log);
  std::string line;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    const std::string type = j.at("type"), id = j.at("player_id");
    if (type == "player") group[id] = j.at("group");
    if (type == "event" && j.at("event") == "completed") completions[id]++;
    if (type == "batch" && j.at("action") == "generated") {
      generated[id].push_back(j.at("history_size"));
      batches_ok = batches_ok && j.at("batch").at("levels").size() == 3;
    }
  }
  std::size_t llm_completions = 0;
  for (const auto& [id, g] : group) {
    std::vector<std::size_t> expected;
    if (g == "llm") {
      for (std::size_t k = 0; k <= completions[id]; ++k) expected.push_back(k);
      llm_completions += completions[id];
    }
    batches_ok = batches_ok && generated[id] == expected;
  }

  double worst_mcse = 0;
  std::size_t statements = 0;
  bool reports_ok = true;
  for (const char* model : {"completion", "ratings", "ratings-with-dropouts"}) {
    const auto r = testing::run_command(cli + " analyze --input '" + (first.path() / "export.csv").string() +
                                        "' --model " + model + " 2>/dev/null");
    if (r.exit_code != 0) {
      reports_ok = false;
      continue;
    }
    const auto report = nlohmann::json::parse(r.out);
    for (const char* key : {"model", "groups", "counts", "posterior_summary", "prob_statements"}) {
      reports_ok = reports_ok && report.contains(key);
    }
    for (const auto& s : report.at("prob_statements")) {
      worst_mcse = std::max(worst_mcse, s.at("mcse").get<double>());
      ++statements;
    }
  }
  const bool pass = ms < kSimulationBudgetMs && identical && batches_ok && llm_completions > 0 && reports_ok &&
                    statements == 6 && worst_mcse < kMaxMcse;
  return {pass, budget(ms, kSimulationBudgetMs) + ", rerun log " + (identical ? "identical" : "DIFFERS") + ", " +
                    std::to_string(llm_completions) + " llm completions each " +
                    (batches_ok ? "followed by a 3-level batch" : "NOT matched by a batch") + ", " +
                    std::to_string(statements) + " statements, max MCSE " + num(worst_mcse, 5)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"conjugate posterior exactness", conjugate_exactness},
      {"all-levels completion comparison", all_levels_comparison},
      {"first-level completion comparison", first_level_comparison},
      {"ordered-logit recovery", ordered_logit_recovery},
      {"directional rating findings", rating_directions},
      {"sample level batch fidelity", sample_batch_fidelity},
      {"prompt golden tests", prompt_goldens},
      {"engine property suite", engine_properties},
      {"end-to-end simulation", end_to_end},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures;
}
