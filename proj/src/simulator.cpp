#include "m3pcg/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "m3pcg/prompts.hpp"
#include "m3pcg/service.hpp"

namespace m3pcg {
namespace {

// A persona that cannot find a productive swap would otherwise spin forever,
// since reverted swaps cost no move.
constexpr int kMaxActionsPerLevel = 5'000;

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(name) + " must be within [0, 1]");
}

double progress_of(const LevelState& s) {
  const double score = std::min(1.0, static_cast<double>(s.score) / s.params.score_goal);
  double collected = 0.0;
  for (std::size_t i = 0; i < s.collection_progress.size(); ++i) {
    collected += std::min(1.0, static_cast<double>(s.collection_progress[i]) / s.params.collection_goals[i]);
  }
  collected /= static_cast<double>(std::max<std::size_t>(1, s.collection_progress.size()));
  return 0.5 * (score + collected);
}

bool still_needed(const LevelState& s, Color c) {
  for (std::size_t i = 0; i < s.goal_colors.size(); ++i) {
    if (s.goal_colors[i] == c && s.collection_progress[i] < s.params.collection_goals[i]) return true;
  }
  return false;
}

// Pieces cleared by the swap's first wave; needed goal colors count double.
int swap_value(const LevelState& s, const Swap& swap) {
  Board b = s.board;
  b.swap_cells(swap.a, swap.b);
  int value = 0;
  for (const auto& group : find_matches(b)) {
    for (const Cell c : group) value += still_needed(s, b.at(c)) ? 2 : 1;
  }
  return value;
}

Cell best_booster_cell(const LevelState& s) {
  Cell best{s.board.width() / 2, s.board.height() / 2};
  int best_value = -1;
  for (int y = 0; y < s.board.height(); ++y) {
    for (int x = 0; x < s.board.width(); ++x) {
      int value = 0;
      for (const Cell c : booster_region(s.board, {x, y})) value += still_needed(s, s.board.at(c)) ? 2 : 1;
      if (value > best_value) {
        best_value = value;
        best = {x, y};
      }
    }
  }
  return best;
}

Swap random_swap(const Board& board, Rng& rng) {
  static constexpr Cell kDirs[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (;;) {
    const Cell a{rng.uniform_int(0, board.width() - 1), rng.uniform_int(0, board.height() - 1)};
    const Cell d = kDirs[rng.uniform_int(0, 3)];
    const Cell b{a.x + d.x, a.y + d.y};
    if (board.in_bounds(b)) return {a, b};
  }
}

}  // namespace

void Persona::check() const {
  check_unit(skill, "skill");
  check_unit(patience, "patience");
  check_unit(difficulty_preference, "difficulty_preference");
  check_unit(booster_propensity, "booster_propensity");
}

void to_json(nlohmann::json& j, const BehaviorConstants& b) {
  j = {{"quit_scale", b.quit_scale},
       {"revert_frustration", b.revert_frustration},
       {"lag_frustration", b.lag_frustration},
       {"booster_rate", b.booster_rate},
       {"stall_lag", b.stall_lag},
       {"leave_after_completion", b.leave_after_completion},
       {"leave_after_dropout", b.leave_after_dropout},
       {"leave_floor", b.leave_floor}};
}

void from_json(const nlohmann::json& j, BehaviorConstants& b) {
  const BehaviorConstants d;
  b.quit_scale = j.value("quit_scale", d.quit_scale);
  b.revert_frustration = j.value("revert_frustration", d.revert_frustration);
  b.lag_frustration = j.value("lag_frustration", d.lag_frustration);
  b.booster_rate = j.value("booster_rate", d.booster_rate);
  b.stall_lag = j.value("stall_lag", d.stall_lag);
  b.leave_after_completion = j.value("leave_after_completion", d.leave_after_completion);
  b.leave_after_dropout = j.value("leave_after_dropout", d.leave_after_dropout);
  b.leave_floor = j.value("leave_floor", d.leave_floor);
}

std::string_view to_string(PlayOutcome outcome) {
  switch (outcome) {
    case PlayOutcome::Completed: return "completed";
    case PlayOutcome::Failed: return "failed";
    case PlayOutcome::Quit: return "quit";
  }
  return "?";
}

PlayResult play_level(const Persona& persona, const LevelParams& params, int level_in_row, Rng& rng,
                      const BehaviorConstants& behavior) {
  persona.check();
  LevelInstance instance = instantiate(params, rng);
  LevelState state = start_level(params, std::move(instance.board), std::move(instance.goal_colors));

  PlayResult result;
  int consecutive_reverts = 0;
  bool quit = false;
  for (int actions = 0; level_status(state) == LevelStatus::InProgress; ++actions) {
    const double used = 1.0 - static_cast<double>(state.moves_left) / params.num_moves;
    const double lag = std::max(0.0, used - progress_of(state));
    const double frustration = behavior.revert_frustration * consecutive_reverts + behavior.lag_frustration * lag;
    const double p_quit = std::min(1.0, behavior.quit_scale * (1.0 - persona.patience) * frustration);
    if (actions >= kMaxActionsPerLevel || rng.bernoulli(p_quit)) {
      quit = true;
      break;
    }

    const bool stalled = consecutive_reverts > 0 || lag > behavior.stall_lag;
    if (stalled && state.boosters_used < kBoosterBudget &&
        rng.bernoulli(persona.booster_propensity * behavior.booster_rate)) {
      state = use_booster(state, best_booster_cell(state), rng).first;
      consecutive_reverts = 0;
      continue;
    }

    Swap swap;
    if (rng.bernoulli(persona.skill)) {
      const auto moves = available_moves(state.board);
      int best = -1;
      for (const auto& m : moves) {
        const int v = swap_value(state, m);
        if (v > best) {
          best = v;
          swap = m;
        }
      }
      if (best < 0) swap = random_swap(state.board, rng);
    } else {
      swap = random_swap(state.board, rng);
    }

    auto [next, outcome] = apply_move(state, swap, rng);
    state = std::move(next);
    switch (outcome.kind) {
      case MoveKind::Committed:
        result.committed_swaps++;
        consecutive_reverts = 0;
        break;
      case MoveKind::Reverted:
        result.reverted_swaps++;
        consecutive_reverts++;
        break;
      case MoveKind::Illegal:
        result.illegal_swaps++;
        break;
    }
  }

  if (quit) {
    result.outcome = PlayOutcome::Quit;
  } else {
    result.outcome = level_status(state) == LevelStatus::Completed ? PlayOutcome::Completed : PlayOutcome::Failed;
  }
  GameplayRecord& r = result.record;
  r.level_in_row = level_in_row;
  r.score = state.score;
  r.score_goal = params.score_goal;
  r.moves_left = state.moves_left;
  r.num_moves = params.num_moves;
  r.num_failed_moves = state.failed_moves;
  r.num_clicks_on_board = state.clicks;
  r.num_boosters_used = state.boosters_used;
  r.level_params = params;
  return result;
}

double level_difficulty(const GameplayRecord& record) {
  const double tightness =
      record.score > 0 ? std::clamp(static_cast<double>(record.score_goal) / record.score, 0.0, 1.0) : 1.0;
  const double spent = 1.0 - static_cast<double>(record.moves_left) / record.num_moves;
  return 0.5 * tightness + 0.5 * std::clamp(spent, 0.0, 1.0);
}

int rating_from_difficulty(double difficulty, double preference, int noise) {
  const int base = static_cast<int>(std::lround(5.0 - 4.0 * std::abs(difficulty - preference)));
  return std::clamp(base + noise, 1, 5);
}

int rate_level(const Persona& persona, const PlayResult& result, Rng& rng) {
  if (result.outcome != PlayOutcome::Completed) throw std::logic_error("only completed levels are rated");
  const int noise = rng.uniform_int(-1, 1);
  return rating_from_difficulty(level_difficulty(result.record), persona.difficulty_preference, noise);
}

Persona PersonaDistribution::sample(Rng& rng) const {
  const auto draw = [&rng](const UniformRange& r) { return r.lo + (r.hi - r.lo) * rng.uniform01(); };
  Persona p;
  p.skill = draw(skill);
  p.patience = draw(patience);
  p.difficulty_preference = draw(difficulty_preference);
  p.booster_propensity = draw(booster_propensity);
  p.check();
  return p;
}

std::string_view to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::Mock: return "mock";
    case GeneratorKind::Live: return "live";
    case GeneratorKind::TraditionalOnly: return "traditional-only";
  }
  return "?";
}

std::optional<GeneratorKind> parse_generator_kind(std::string_view text) {
  for (auto k : {GeneratorKind::Mock, GeneratorKind::Live, GeneratorKind::TraditionalOnly}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

void SimulationConfig::check() const {
  if (n_players < 1) throw std::invalid_argument("n_players must be at least 1");
  if (max_levels_per_player < 1) throw std::invalid_argument("max_levels_per_player must be at least 1");
  for (const UniformRange* r : {&personas.skill, &personas.patience, &personas.difficulty_preference,
                                &personas.booster_propensity}) {
    if (!(0.0 <= r->lo && r->lo <= r->hi && r->hi <= 1.0)) throw std::invalid_argument("persona range outside [0, 1]");
  }
  ranges.check();
}

TelemetryStore::Clock logical_clock(std::int64_t start, std::int64_t step) {
  auto t = std::make_shared<std::int64_t>(start);
  return [t, step] { return *t += step; };
}

SimulationSummary run_experiment(const SimulationConfig& config, TelemetryStore& store,
                                 std::shared_ptr<LlmClient> client) {
  config.check();
  if (!client) {
    switch (config.generator) {
      case GeneratorKind::Mock: client = std::make_shared<MockLlmClient>(config.thresholds); break;
      case GeneratorKind::Live: client = std::make_shared<LiveLlmClient>(config.live); break;
      case GeneratorKind::TraditionalOnly: break;
    }
  }

  int next_id = 0;
  const auto ids = [&] {
    char buf[64];
    std::snprintf(buf, sizeof buf, "sim-%llu-%04d", static_cast<unsigned long long>(config.seed), next_id++);
    return std::string(buf);
  };
  InlineRunner runner;
  LevelService service(store, client, ServiceConfig{config.ranges, config.retries, mix_seed(config.seed, 0x5eed)},
                       runner, ids);

  SimulationSummary summary;
  service.set_request_observer([&summary](const std::string&, const LlmRequest& request) {
    if (!request.history_text.empty()) {
      summary.max_history_in_request =
          std::max(summary.max_history_in_request, parse_history_prompt(request.history_text).size());
    }
  });

  const BehaviorConstants& b = config.behavior;
  for (int i = 0; i < config.n_players; ++i) {
    const std::string player_id = service.onboard_player().player_id;
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(i) + 1));
    const Persona persona = config.personas.sample(rng);
    summary.players++;

    for (int level = 1; level <= config.max_levels_per_player; ++level) {
      const LevelBatch batch = service.get_levels(player_id);
      service.record_event({player_id, level, RunEventKind::Started, 0, std::nullopt, 0, {}});
      const PlayResult result = play_level(persona, batch.levels.front(), level, rng, b);
      summary.levels_started++;

      double leave;
      if (result.outcome == PlayOutcome::Completed) {
        const int rating = rate_level(persona, result, rng);
        service.complete_level(player_id, result.record, rating);
        summary.levels_completed++;
        leave = b.leave_floor + b.leave_after_completion * (1.0 - persona.patience) * (1.0 + (5 - rating) / 4.0);
      } else {
        const auto kind = result.outcome == PlayOutcome::Quit ? RunEventKind::Quit : RunEventKind::Failed;
        service.record_event({player_id, level, kind, 0, result.record, 0, {}});
        leave = b.leave_floor + b.leave_after_dropout * (1.0 - persona.patience);
      }
      if (rng.bernoulli(leave)) break;
    }
  }
  service.wait_idle();
  summary.model_calls = service.model_calls();
  summary.fallbacks = service.fallbacks();
  return summary;
}

}  // namespace m3pcg
