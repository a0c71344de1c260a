#pragma once

// Players, experiment groups, level-run events and served level batches,
// persisted as an append-only JSON-lines log plus a compacted snapshot.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "m3pcg/gameplay_record.hpp"
#include "m3pcg/level_params.hpp"

namespace m3pcg {

enum class Group { LlmPcg, TraditionalPcg };
std::string_view to_string(Group group);  // "llm" / "traditional"
std::optional<Group> parse_group(std::string_view text);

// Hash-parity group of a player id; stable across processes and platforms.
Group group_for_id(std::string_view player_id);

enum class RunEventKind { Started, Completed, Failed, Quit, Rated, ScreenView };
std::string_view to_string(RunEventKind kind);
std::optional<RunEventKind> parse_event_kind(std::string_view text);

struct LevelRunEvent {
  std::string player_id;
  int level_in_row = 0;
  RunEventKind kind = RunEventKind::Started;
  std::int64_t timestamp = 0;             // 0: stamped by the store
  std::optional<GameplayRecord> payload;  // required for Completed, optional for Failed/Quit
  int rating = 0;                         // Rated only
  std::string screen;                     // ScreenView only
};

enum class BatchSource { Llm, MockLlm, Traditional, Fallback };
std::string_view to_string(BatchSource source);
std::optional<BatchSource> parse_batch_source(std::string_view text);

struct LevelBatch {
  std::vector<LevelParams> levels;
  std::int64_t generated_at = 0;
  BatchSource source = BatchSource::Traditional;
  friend bool operator==(const LevelBatch&, const LevelBatch&) = default;
};

void to_json(nlohmann::json& j, const LevelBatch& b);
void from_json(const nlohmann::json& j, LevelBatch& b);

struct PlayerProfile {
  std::string player_id;
  Group group = Group::LlmPcg;
  std::int64_t created_at = 0;
  std::vector<GameplayRecord> history;  // completed runs, oldest first
  std::optional<LevelBatch> pending;    // newest generated batch
  std::size_t pending_history_size = 0; // history length the pending batch was built from
  std::optional<LevelBatch> last_served;
};

struct ExportFilter {
  bool include_dropouts = false;  // rating 0 for runs that never reached the rating screen
  std::optional<Group> group;
  bool first_level_only = false;
  bool include_open = false;  // runs still in progress
};

struct ExportRow {
  std::string player_id;
  Group group = Group::LlmPcg;
  int level_in_row = 0;
  bool completed = false;
  std::optional<int> rating;
  friend bool operator==(const ExportRow&, const ExportRow&) = default;
};

std::string export_csv(std::span<const ExportRow> rows);
std::vector<ExportRow> parse_export_csv(std::istream& in);

class UnknownPlayer : public std::runtime_error {
 public:
  explicit UnknownPlayer(const std::string& id) : std::runtime_error("unknown player " + id) {}
};

class EventRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The event was already recorded; callers treat this as an idempotent replay.
class DuplicateEvent : public EventRejected {
 public:
  using EventRejected::EventRejected;
};

class TelemetryStore {
 public:
  using Clock = std::function<std::int64_t()>;

  static constexpr const char* kEventLogName = "events.jsonl";
  static constexpr const char* kSnapshotName = "profiles.json";

  // In-memory store.
  explicit TelemetryStore(Clock clock = {});
  // Persistent store rooted at `directory`; existing state is reloaded.
  explicit TelemetryStore(std::filesystem::path directory, Clock clock = {});
  ~TelemetryStore();

  TelemetryStore(const TelemetryStore&) = delete;
  TelemetryStore& operator=(const TelemetryStore&) = delete;

  // Creates the profile on first sight; later calls return the stored group.
  Group assign_group(const std::string& player_id);

  bool has_player(const std::string& player_id) const;
  PlayerProfile profile(const std::string& player_id) const;
  std::vector<std::string> player_ids() const;

  // Throws UnknownPlayer, DuplicateEvent or EventRejected.
  void record_event(LevelRunEvent event);
  bool has_event(const std::string& player_id, int level_in_row, RunEventKind kind) const;

  void store_pending_batch(const std::string& player_id, const LevelBatch& batch, std::size_t history_size);
  void record_served_batch(const std::string& player_id, const LevelBatch& batch);

  // One row per started run, in start order.
  std::vector<ExportRow> export_dataset(const ExportFilter& filter = {}) const;

  // Applies event-log lines newer than the current state. Lets an in-memory
  // store be rebuilt from a copied events.jsonl.
  void replay_log(std::istream& in);

  // Rewrites the snapshot file; a no-op for in-memory stores.
  void compact();

  std::int64_t now() const;
  const std::filesystem::path& directory() const { return directory_; }
  std::filesystem::path event_log_path() const { return directory_ / kEventLogName; }

 private:
  struct RunState {
    std::optional<RunEventKind> terminal;
    std::optional<int> rating;
    std::size_t history_index = 0;
  };
  using RunKey = std::pair<std::string, int>;

  void load();
  void replay_lines(std::istream& in);
  void append(nlohmann::json line);
  void apply(const nlohmann::json& line);
  void validate(const LevelRunEvent& event) const;
  PlayerProfile& profile_ref(const std::string& player_id);
  nlohmann::json snapshot_json() const;
  void restore_snapshot(const nlohmann::json& snapshot);

  std::filesystem::path directory_;
  Clock clock_;
  mutable std::mutex mutex_;
  std::ofstream log_;
  std::int64_t seq_ = 0;

  std::unordered_map<std::string, PlayerProfile> profiles_;
  std::vector<std::string> player_order_;
  std::map<RunKey, RunState> runs_;
  std::vector<RunKey> run_order_;
};

}  // namespace m3pcg
