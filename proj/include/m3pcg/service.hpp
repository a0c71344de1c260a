#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "m3pcg/gameplay_record.hpp"
#include "m3pcg/levelgen.hpp"
#include "m3pcg/llm.hpp"
#include "m3pcg/telemetry.hpp"

namespace m3pcg {

// Where background level generation runs.
class TaskRunner {
 public:
  virtual ~TaskRunner() = default;
  virtual void submit(std::function<void()> task) = 0;
};

// Runs tasks on the caller's thread. Used by the simulator for reproducible runs.
class InlineRunner : public TaskRunner {
 public:
  void submit(std::function<void()> task) override { task(); }
};

// One detached-for-the-caller thread per task; joined on destruction.
class ThreadRunner : public TaskRunner {
 public:
  ~ThreadRunner() override;
  void submit(std::function<void()> task) override;

 private:
  std::mutex mutex_;
  std::vector<std::thread> threads_;
};

struct ServiceConfig {
  ParamRanges ranges;
  int retries = kDefaultRetries;
  std::uint64_t seed = 0;  // 0: seeded from std::random_device
};

struct Onboarding {
  std::string player_id;
  Group group = Group::LlmPcg;
};

enum class AckStatus { Ok, Duplicate };
std::string_view to_string(AckStatus status);

class ValidationFailed : public std::runtime_error {
 public:
  explicit ValidationFailed(std::vector<std::string> reasons);
  const std::vector<std::string>& reasons() const { return reasons_; }

 private:
  std::vector<std::string> reasons_;
};

class LevelService {
 public:
  using IdGenerator = std::function<std::string()>;
  using RequestObserver = std::function<void(const std::string& player_id, const LlmRequest& request)>;

  // `client` may be null: the llm group is then served traditional levels.
  LevelService(TelemetryStore& store, std::shared_ptr<LlmClient> client, ServiceConfig config, TaskRunner& runner,
               IdGenerator ids = {});
  ~LevelService();

  LevelService(const LevelService&) = delete;
  LevelService& operator=(const LevelService&) = delete;

  Onboarding onboard_player();

  // Never waits for the model: the llm group gets the fresh pending batch, or
  // the last served batch (source Fallback) while regeneration is in flight.
  LevelBatch get_levels(const std::string& player_id);

  // Records started (if missing), completed and rated, then schedules
  // regeneration for llm-group players. Throws ValidationFailed or UnknownPlayer.
  AckStatus complete_level(const std::string& player_id, GameplayRecord record, int rating);

  // started / failed / quit / screen_view.
  AckStatus record_event(LevelRunEvent event);

  // Blocks until no generation is pending.
  void wait_idle();

  void set_request_observer(RequestObserver observer);
  std::int64_t model_calls() const;
  std::int64_t fallbacks() const;

  TelemetryStore& store() { return store_; }

 private:
  struct PlayerSlot {
    std::mutex mutex;  // serializes this player's requests
    bool in_flight = false;
    bool rerun = false;
    std::uint64_t fetches = 0;
  };

  PlayerSlot& slot(const std::string& player_id);
  void schedule_generation(const std::string& player_id);
  void generate_once(const std::string& player_id);
  std::vector<LevelParams> traditional_levels(const std::string& player_id, std::uint64_t salt);

  TelemetryStore& store_;
  std::shared_ptr<LlmClient> client_;
  ServiceConfig config_;
  TaskRunner& runner_;
  IdGenerator ids_;

  mutable std::mutex mutex_;
  std::condition_variable idle_;
  int pending_tasks_ = 0;
  std::unordered_map<std::string, std::unique_ptr<PlayerSlot>> slots_;
  RequestObserver observer_;
  std::int64_t model_calls_ = 0;
  std::int64_t fallbacks_ = 0;
  std::uint64_t generation_counter_ = 0;
};

}  // namespace m3pcg
