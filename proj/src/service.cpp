#include "m3pcg/service.hpp"

#include <cstdio>
#include <iostream>
#include <random>

#include "m3pcg/prompts.hpp"

namespace m3pcg {
namespace {

std::string random_player_id() {
  static std::mutex mutex;
  static std::mt19937_64 engine{std::random_device{}()};
  std::lock_guard lock(mutex);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(engine()),
                static_cast<unsigned long long>(engine()));
  return buf;
}

}  // namespace

ThreadRunner::~ThreadRunner() {
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(mutex_);
    threads.swap(threads_);
  }
  for (auto& t : threads) t.join();
}

void ThreadRunner::submit(std::function<void()> task) {
  std::lock_guard lock(mutex_);
  threads_.emplace_back(std::move(task));
}

std::string_view to_string(AckStatus status) { return status == AckStatus::Ok ? "ok" : "duplicate"; }

ValidationFailed::ValidationFailed(std::vector<std::string> reasons)
    : std::runtime_error([&] {
        std::string msg = "invalid record:";
        for (const auto& r : reasons) msg += " " + r + ";";
        return msg;
      }()),
      reasons_(std::move(reasons)) {}

LevelService::LevelService(TelemetryStore& store, std::shared_ptr<LlmClient> client, ServiceConfig config,
                           TaskRunner& runner, IdGenerator ids)
    : store_(store),
      client_(std::move(client)),
      config_(std::move(config)),
      runner_(runner),
      ids_(ids ? std::move(ids) : IdGenerator(random_player_id)) {
  config_.ranges.check();
  if (config_.retries < 0) throw std::invalid_argument("retries must be non-negative");
  if (config_.seed == 0) config_.seed = (std::uint64_t{std::random_device{}()} << 32) | std::random_device{}();
}

LevelService::~LevelService() { wait_idle(); }

LevelService::PlayerSlot& LevelService::slot(const std::string& player_id) {
  std::lock_guard lock(mutex_);
  auto& s = slots_[player_id];
  if (!s) s = std::make_unique<PlayerSlot>();
  return *s;
}

Onboarding LevelService::onboard_player() {
  std::string id = ids_();
  while (store_.has_player(id)) id = ids_();
  const Group group = store_.assign_group(id);
  // Cold-open levels are prepared right away so the first fetch is personalized.
  if (group == Group::LlmPcg && client_) schedule_generation(id);
  return {id, group};
}

std::vector<LevelParams> LevelService::traditional_levels(const std::string& player_id, std::uint64_t salt) {
  Rng rng(mix_seed(mix_seed(config_.seed, stable_hash(player_id)), salt));
  return generate_traditional_batch(rng, config_.ranges);
}

LevelBatch LevelService::get_levels(const std::string& player_id) {
  PlayerSlot& s = slot(player_id);
  std::lock_guard player_lock(s.mutex);
  const PlayerProfile profile = store_.profile(player_id);

  LevelBatch batch;
  batch.generated_at = store_.now();
  bool schedule = false;
  if (profile.group == Group::TraditionalPcg || !client_) {
    batch.levels = traditional_levels(player_id, ++s.fetches);
    batch.source = BatchSource::Traditional;
  } else if (profile.pending && profile.pending_history_size == profile.history.size()) {
    batch = *profile.pending;
  } else {
    if (profile.last_served) {
      batch.levels = profile.last_served->levels;
    } else {
      batch.levels = traditional_levels(player_id, ++s.fetches);
    }
    batch.source = BatchSource::Fallback;
    std::lock_guard lock(mutex_);
    fallbacks_++;
    schedule = !s.in_flight;  // e.g. after a restart lost the queued work
  }
  store_.record_served_batch(player_id, batch);
  if (schedule) schedule_generation(player_id);
  return batch;
}

AckStatus LevelService::complete_level(const std::string& player_id, GameplayRecord record, int rating) {
  PlayerSlot& s = slot(player_id);
  Group group;
  {
    std::lock_guard player_lock(s.mutex);
    if (!store_.has_player(player_id)) throw UnknownPlayer(player_id);

    std::vector<std::string> reasons = check_record(record);
    if (rating < 1 || rating > 5) reasons.push_back("rating: must be within 1..5");
    if (record.user_rating && *record.user_rating != rating) reasons.push_back("user_rating: differs from rating");
    if (!reasons.empty()) throw ValidationFailed(std::move(reasons));
    record.user_rating = rating;

    const int level = record.level_in_row;
    if (store_.has_event(player_id, level, RunEventKind::Completed)) return AckStatus::Duplicate;
    if (!store_.has_event(player_id, level, RunEventKind::Started)) {
      store_.record_event({player_id, level, RunEventKind::Started, 0, std::nullopt, 0, {}});
    }
    store_.record_event({player_id, level, RunEventKind::Completed, 0, record, 0, {}});
    store_.record_event({player_id, level, RunEventKind::Rated, 0, std::nullopt, rating, {}});
    group = store_.profile(player_id).group;
  }
  if (group == Group::LlmPcg && client_) schedule_generation(player_id);
  return AckStatus::Ok;
}

AckStatus LevelService::record_event(LevelRunEvent event) {
  if (event.kind == RunEventKind::Completed || event.kind == RunEventKind::Rated) {
    throw EventRejected("completions and ratings go through complete_level");
  }
  PlayerSlot& s = slot(event.player_id);
  std::lock_guard player_lock(s.mutex);
  try {
    store_.record_event(std::move(event));
  } catch (const DuplicateEvent&) {
    return AckStatus::Duplicate;
  }
  return AckStatus::Ok;
}

void LevelService::schedule_generation(const std::string& player_id) {
  PlayerSlot& s = slot(player_id);
  {
    std::lock_guard lock(mutex_);
    if (s.in_flight) {
      s.rerun = true;
      return;
    }
    s.in_flight = true;
    pending_tasks_++;
  }
  runner_.submit([this, player_id, &s] {
    for (;;) {
      try {
        generate_once(player_id);
      } catch (const std::exception& e) {
        std::cerr << "level generation for " << player_id << " failed: " << e.what() << '\n';
      }
      std::lock_guard lock(mutex_);
      if (s.rerun) {
        s.rerun = false;
        continue;
      }
      s.in_flight = false;
      if (--pending_tasks_ == 0) idle_.notify_all();
      return;
    }
  });
}

void LevelService::generate_once(const std::string& player_id) {
  const PlayerProfile profile = store_.profile(player_id);
  const auto& history = profile.history;
  const std::size_t first = history.size() > kMaxHistoryRecords ? history.size() - kMaxHistoryRecords : 0;
  const std::span<const GameplayRecord> recent(history.data() + first, history.size() - first);
  const LlmRequest request =
      recent.empty() ? make_first_levels_request(config_.ranges) : make_history_request(recent, config_.ranges);

  RequestObserver observer;
  std::uint64_t counter;
  {
    std::lock_guard lock(mutex_);
    observer = observer_;
    counter = ++generation_counter_;
    model_calls_++;
  }
  if (observer) observer(player_id, request);

  LevelBatch batch;
  try {
    GenerationResult result = request_levels(*client_, request, config_.ranges, config_.retries);
    batch.levels = std::move(result.levels);
    batch.source = client_->is_mock() ? BatchSource::MockLlm : BatchSource::Llm;
  } catch (const FallbackRequired& e) {
    std::cerr << "falling back to traditional levels for " << player_id << ": " << e.what() << '\n';
    batch.levels = traditional_levels(player_id, mix_seed(counter, 0x9e3779b97f4a7c15ULL));
    batch.source = BatchSource::Fallback;
  }
  batch.generated_at = store_.now();
  store_.store_pending_batch(player_id, batch, history.size());
}

void LevelService::wait_idle() {
  std::unique_lock lock(mutex_);
  idle_.wait(lock, [this] { return pending_tasks_ == 0; });
}

void LevelService::set_request_observer(RequestObserver observer) {
  std::lock_guard lock(mutex_);
  observer_ = std::move(observer);
}

std::int64_t LevelService::model_calls() const {
  std::lock_guard lock(mutex_);
  return model_calls_;
}

std::int64_t LevelService::fallbacks() const {
  std::lock_guard lock(mutex_);
  return fallbacks_;
}

}  // namespace m3pcg
