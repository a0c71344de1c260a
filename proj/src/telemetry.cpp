#include "m3pcg/telemetry.hpp"

#include <chrono>
#include <istream>
#include <sstream>

#include "m3pcg/rng.hpp"

namespace m3pcg {
namespace {

std::int64_t wall_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string run_label(const std::string& player_id, int level_in_row) {
  return player_id + " level " + std::to_string(level_in_row);
}

}  // namespace

std::string_view to_string(Group group) { return group == Group::LlmPcg ? "llm" : "traditional"; }

std::optional<Group> parse_group(std::string_view text) {
  if (text == "llm") return Group::LlmPcg;
  if (text == "traditional") return Group::TraditionalPcg;
  return std::nullopt;
}

Group group_for_id(std::string_view player_id) {
  return (mix_seed(stable_hash(player_id), 0) & 1U) == 0 ? Group::LlmPcg : Group::TraditionalPcg;
}

std::string_view to_string(RunEventKind kind) {
  switch (kind) {
    case RunEventKind::Started: return "started";
    case RunEventKind::Completed: return "completed";
    case RunEventKind::Failed: return "failed";
    case RunEventKind::Quit: return "quit";
    case RunEventKind::Rated: return "rated";
    case RunEventKind::ScreenView: return "screen_view";
  }
  return "?";
}

std::optional<RunEventKind> parse_event_kind(std::string_view text) {
  for (auto kind : {RunEventKind::Started, RunEventKind::Completed, RunEventKind::Failed, RunEventKind::Quit,
                    RunEventKind::Rated, RunEventKind::ScreenView}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

std::string_view to_string(BatchSource source) {
  switch (source) {
    case BatchSource::Llm: return "llm";
    case BatchSource::MockLlm: return "mock_llm";
    case BatchSource::Traditional: return "traditional";
    case BatchSource::Fallback: return "fallback";
  }
  return "?";
}

std::optional<BatchSource> parse_batch_source(std::string_view text) {
  for (auto s : {BatchSource::Llm, BatchSource::MockLlm, BatchSource::Traditional, BatchSource::Fallback}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

void to_json(nlohmann::json& j, const LevelBatch& b) {
  j = nlohmann::json{{"levels", b.levels}, {"source", to_string(b.source)}, {"generated_at", b.generated_at}};
}

void from_json(const nlohmann::json& j, LevelBatch& b) {
  j.at("levels").get_to(b.levels);
  b.generated_at = j.value("generated_at", std::int64_t{0});
  const auto source = parse_batch_source(j.at("source").get<std::string>());
  if (!source) throw std::invalid_argument("unknown batch source");
  b.source = *source;
}

std::string export_csv(std::span<const ExportRow> rows) {
  std::ostringstream out;
  out << "player_id,group,level_in_row,completed,rating\n";
  for (const auto& r : rows) {
    out << r.player_id << ',' << to_string(r.group) << ',' << r.level_in_row << ',' << (r.completed ? 1 : 0) << ',';
    if (r.rating) out << *r.rating;
    out << '\n';
  }
  return out.str();
}

std::vector<ExportRow> parse_export_csv(std::istream& in) {
  std::vector<ExportRow> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  if (line.rfind("player_id,group,level_in_row,completed,rating", 0) != 0) {
    throw std::invalid_argument("unexpected CSV header: " + line);
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.emplace_back();
    if (fields.size() != 5) throw std::invalid_argument("CSV line " + std::to_string(line_no) + " needs 5 fields");
    ExportRow row;
    row.player_id = fields[0];
    const auto group = parse_group(fields[1]);
    if (!group) throw std::invalid_argument("CSV line " + std::to_string(line_no) + ": bad group");
    row.group = *group;
    row.level_in_row = std::stoi(fields[2]);
    row.completed = fields[3] == "1";
    if (!fields[4].empty()) row.rating = std::stoi(fields[4]);
    rows.push_back(std::move(row));
  }
  return rows;
}

TelemetryStore::TelemetryStore(Clock clock) : clock_(clock ? std::move(clock) : Clock(wall_clock_ms)) {}

TelemetryStore::TelemetryStore(std::filesystem::path directory, Clock clock)
    : directory_(std::move(directory)), clock_(clock ? std::move(clock) : Clock(wall_clock_ms)) {
  std::filesystem::create_directories(directory_);
  load();
  log_.open(event_log_path(), std::ios::app | std::ios::binary);
  if (!log_) throw std::runtime_error("cannot open event log " + event_log_path().string());
}

TelemetryStore::~TelemetryStore() {
  try {
    compact();
  } catch (...) {
  }
}

std::int64_t TelemetryStore::now() const { return clock_(); }

void TelemetryStore::load() {
  const auto snapshot_path = directory_ / kSnapshotName;
  if (std::filesystem::exists(snapshot_path)) {
    std::ifstream in(snapshot_path);
    restore_snapshot(nlohmann::json::parse(in));
  }
  std::ifstream in(event_log_path());
  replay_lines(in);
}

void TelemetryStore::replay_lines(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    if (j.at("seq").get<std::int64_t>() <= seq_) continue;
    apply(j);
    seq_ = j.at("seq").get<std::int64_t>();
  }
}

void TelemetryStore::replay_log(std::istream& in) {
  std::lock_guard lock(mutex_);
  replay_lines(in);
}

void TelemetryStore::append(nlohmann::json line) {
  line["seq"] = ++seq_;
  if (log_.is_open()) {
    log_ << line.dump() << '\n';
    log_.flush();
    if (!log_) throw std::runtime_error("event log write failed");
  }
  apply(line);
}

PlayerProfile& TelemetryStore::profile_ref(const std::string& player_id) {
  const auto it = profiles_.find(player_id);
  if (it == profiles_.end()) throw UnknownPlayer(player_id);
  return it->second;
}

void TelemetryStore::apply(const nlohmann::json& line) {
  const auto type = line.at("type").get<std::string>();
  const auto player_id = line.at("player_id").get<std::string>();

  if (type == "player") {
    PlayerProfile p;
    p.player_id = player_id;
    p.group = parse_group(line.at("group").get<std::string>()).value();
    p.created_at = line.at("timestamp").get<std::int64_t>();
    profiles_.emplace(player_id, std::move(p));
    player_order_.push_back(player_id);
    return;
  }

  PlayerProfile& profile = profile_ref(player_id);
  if (type == "batch") {
    const LevelBatch batch = line.at("batch").get<LevelBatch>();
    if (line.at("action").get<std::string>() == "generated") {
      profile.pending = batch;
      profile.pending_history_size = line.at("history_size").get<std::size_t>();
    } else {
      profile.last_served = batch;
    }
    return;
  }

  const auto kind = parse_event_kind(line.at("event").get<std::string>()).value();
  const int level = line.at("level_in_row").get<int>();
  const RunKey key{player_id, level};
  switch (kind) {
    case RunEventKind::Started:
      runs_.emplace(key, RunState{});
      run_order_.push_back(key);
      break;
    case RunEventKind::Completed: {
      RunState& run = runs_.at(key);
      run.terminal = kind;
      run.history_index = profile.history.size();
      profile.history.push_back(line.get<GameplayRecord>());
      break;
    }
    case RunEventKind::Failed:
    case RunEventKind::Quit:
      runs_.at(key).terminal = kind;
      break;
    case RunEventKind::Rated: {
      RunState& run = runs_.at(key);
      run.rating = line.at("user_rating").get<int>();
      profile.history.at(run.history_index).user_rating = run.rating;
      break;
    }
    case RunEventKind::ScreenView:
      break;
  }
}

void TelemetryStore::validate(const LevelRunEvent& e) const {
  if (!profiles_.contains(e.player_id)) throw UnknownPlayer(e.player_id);
  if (e.kind == RunEventKind::ScreenView) {
    if (e.screen.empty()) throw EventRejected("screen_view needs a screen name");
    return;
  }
  if (e.level_in_row < 1) throw EventRejected("level_in_row must be at least 1");

  const auto it = runs_.find({e.player_id, e.level_in_row});
  const std::string label = run_label(e.player_id, e.level_in_row);
  if (e.kind == RunEventKind::Started) {
    if (it != runs_.end()) throw DuplicateEvent(label + " was already started");
    return;
  }
  if (it == runs_.end()) throw EventRejected(label + " was never started");
  const RunState& run = it->second;

  if (e.kind == RunEventKind::Rated) {
    if (run.terminal != RunEventKind::Completed) throw EventRejected("rating requires a completed run: " + label);
    if (run.rating) throw DuplicateEvent(label + " was already rated");
    if (e.rating < 1 || e.rating > 5) throw EventRejected("rating must be within 1..5");
    return;
  }

  if (run.terminal) {
    if (*run.terminal == e.kind) throw DuplicateEvent(label + " already " + std::string(to_string(e.kind)));
    throw EventRejected(label + " already ended as " + std::string(to_string(*run.terminal)));
  }
  if (e.kind == RunEventKind::Completed && !e.payload) throw EventRejected("completed event needs a record");
  if (e.payload) {
    const auto reasons = check_record(*e.payload);
    if (!reasons.empty()) {
      std::string msg = "malformed record:";
      for (const auto& r : reasons) msg += " " + r + ";";
      throw EventRejected(msg);
    }
    if (e.payload->level_in_row != e.level_in_row) throw EventRejected("record level_in_row does not match event");
  }
}

Group TelemetryStore::assign_group(const std::string& player_id) {
  std::lock_guard lock(mutex_);
  if (player_id.empty()) throw std::invalid_argument("player id must not be empty");
  if (const auto it = profiles_.find(player_id); it != profiles_.end()) return it->second.group;
  const Group group = group_for_id(player_id);
  append({{"type", "player"}, {"player_id", player_id}, {"group", to_string(group)}, {"timestamp", clock_()}});
  return group;
}

bool TelemetryStore::has_player(const std::string& player_id) const {
  std::lock_guard lock(mutex_);
  return profiles_.contains(player_id);
}

PlayerProfile TelemetryStore::profile(const std::string& player_id) const {
  std::lock_guard lock(mutex_);
  const auto it = profiles_.find(player_id);
  if (it == profiles_.end()) throw UnknownPlayer(player_id);
  return it->second;
}

std::vector<std::string> TelemetryStore::player_ids() const {
  std::lock_guard lock(mutex_);
  return player_order_;
}

void TelemetryStore::record_event(LevelRunEvent event) {
  std::lock_guard lock(mutex_);
  validate(event);
  if (event.timestamp == 0) event.timestamp = clock_();
  nlohmann::json line = {{"type", "event"},
                         {"player_id", event.player_id},
                         {"level_in_row", event.level_in_row},
                         {"event", to_string(event.kind)},
                         {"timestamp", event.timestamp}};
  // Record fields sit at the top level, next to the event keys.
  if (event.payload) line.update(nlohmann::json(*event.payload));
  if (event.kind == RunEventKind::Rated) line["user_rating"] = event.rating;
  if (event.kind == RunEventKind::ScreenView) line["screen"] = event.screen;
  append(std::move(line));
}

bool TelemetryStore::has_event(const std::string& player_id, int level_in_row, RunEventKind kind) const {
  std::lock_guard lock(mutex_);
  const auto it = runs_.find({player_id, level_in_row});
  if (it == runs_.end()) return false;
  switch (kind) {
    case RunEventKind::Started: return true;
    case RunEventKind::Rated: return it->second.rating.has_value();
    case RunEventKind::ScreenView: return false;
    default: return it->second.terminal == kind;
  }
}

void TelemetryStore::store_pending_batch(const std::string& player_id, const LevelBatch& batch,
                                         std::size_t history_size) {
  std::lock_guard lock(mutex_);
  if (!profiles_.contains(player_id)) throw UnknownPlayer(player_id);
  append({{"type", "batch"},
          {"action", "generated"},
          {"player_id", player_id},
          {"history_size", history_size},
          {"batch", batch},
          {"timestamp", clock_()}});
}

void TelemetryStore::record_served_batch(const std::string& player_id, const LevelBatch& batch) {
  std::lock_guard lock(mutex_);
  if (!profiles_.contains(player_id)) throw UnknownPlayer(player_id);
  append({{"type", "batch"}, {"action", "served"}, {"player_id", player_id}, {"batch", batch}, {"timestamp", clock_()}});
}

std::vector<ExportRow> TelemetryStore::export_dataset(const ExportFilter& filter) const {
  std::lock_guard lock(mutex_);
  std::vector<ExportRow> rows;
  for (const auto& key : run_order_) {
    const RunState& run = runs_.at(key);
    if (!run.terminal && !filter.include_open) continue;
    const Group group = profiles_.at(key.first).group;
    if (filter.group && *filter.group != group) continue;
    if (filter.first_level_only && key.second != 1) continue;
    ExportRow row{key.first, group, key.second, run.terminal == RunEventKind::Completed, std::nullopt};
    if (row.completed) {
      row.rating = run.rating;
    } else if (run.terminal && filter.include_dropouts) {
      row.rating = 0;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json TelemetryStore::snapshot_json() const {
  nlohmann::json players = nlohmann::json::array();
  for (const auto& id : player_order_) {
    const PlayerProfile& p = profiles_.at(id);
    nlohmann::json j = {{"player_id", p.player_id},
                        {"group", to_string(p.group)},
                        {"created_at", p.created_at},
                        {"history", p.history},
                        {"pending_history_size", p.pending_history_size}};
    if (p.pending) j["pending"] = *p.pending;
    if (p.last_served) j["last_served"] = *p.last_served;
    players.push_back(std::move(j));
  }
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& key : run_order_) {
    const RunState& r = runs_.at(key);
    nlohmann::json j = {{"player_id", key.first}, {"level_in_row", key.second}, {"history_index", r.history_index}};
    if (r.terminal) j["terminal"] = to_string(*r.terminal);
    if (r.rating) j["rating"] = *r.rating;
    runs.push_back(std::move(j));
  }
  return {{"last_seq", seq_}, {"players", players}, {"runs", runs}};
}

void TelemetryStore::restore_snapshot(const nlohmann::json& snapshot) {
  seq_ = snapshot.at("last_seq").get<std::int64_t>();
  for (const auto& j : snapshot.at("players")) {
    PlayerProfile p;
    p.player_id = j.at("player_id").get<std::string>();
    p.group = parse_group(j.at("group").get<std::string>()).value();
    p.created_at = j.at("created_at").get<std::int64_t>();
    j.at("history").get_to(p.history);
    p.pending_history_size = j.at("pending_history_size").get<std::size_t>();
    if (j.contains("pending")) p.pending = j.at("pending").get<LevelBatch>();
    if (j.contains("last_served")) p.last_served = j.at("last_served").get<LevelBatch>();
    player_order_.push_back(p.player_id);
    profiles_.emplace(p.player_id, std::move(p));
  }
  for (const auto& j : snapshot.at("runs")) {
    RunKey key{j.at("player_id").get<std::string>(), j.at("level_in_row").get<int>()};
    RunState r;
    r.history_index = j.at("history_index").get<std::size_t>();
    if (j.contains("terminal")) r.terminal = parse_event_kind(j.at("terminal").get<std::string>());
    if (j.contains("rating")) r.rating = j.at("rating").get<int>();
    runs_.emplace(key, r);
    run_order_.push_back(std::move(key));
  }
}

void TelemetryStore::compact() {
  std::lock_guard lock(mutex_);
  if (directory_.empty()) return;
  const auto target = directory_ / kSnapshotName;
  const auto temp = directory_ / (std::string(kSnapshotName) + ".tmp");
  {
    std::ofstream out(temp, std::ios::trunc);
    out << snapshot_json().dump(1) << '\n';
    if (!out) throw std::runtime_error("snapshot write failed");
  }
  std::filesystem::rename(temp, target);
}

}  // namespace m3pcg
