#pragma once

#include "babelbot/engine.hpp"
#include "babelbot/exec.hpp"
#include "babelbot/langid.hpp"
#include "babelbot/metrics.hpp"
#include "babelbot/perception.hpp"
#include "babelbot/sim.hpp"

#include <json.hpp>

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace babelbot::gateway {

// ---------------------------------------------------------------------------
// Time

class Clock {
public:
  virtual ~Clock() = default;
  [[nodiscard]] virtual std::int64_t now_ms() const = 0;
};

/// Wall clock, milliseconds since the Unix epoch.
class SystemClock final : public Clock {
public:
  [[nodiscard]] std::int64_t now_ms() const override;
};

/// Clock that only moves when told to.
class ManualClock final : public Clock {
public:
  explicit ManualClock(std::int64_t start_ms = 0) : now_(start_ms) {}
  [[nodiscard]] std::int64_t now_ms() const override { return now_.load(); }
  void set(std::int64_t ms) { now_.store(ms); }
  void advance(std::int64_t ms) { now_.fetch_add(ms); }

private:
  std::atomic<std::int64_t> now_;
};

// ---------------------------------------------------------------------------
// Configuration

struct GatewayConfig {
  std::filesystem::path resources_dir;  // profiles, lexicons, responses, maps, synonyms
  std::filesystem::path data_dir = "babelbot-data"; // logs and snapshots
  std::string default_map = "office";
  std::string default_language = "en";
  engine::LlmConfig llm;
  bool mock_llm = false;
  std::filesystem::path fixtures; // corpus for the mock client
  perception::PerceptionConfig perception;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string bearer_token; // empty disables the check
  int telemetry_hz = 20;
  int heartbeat_ms = 1000;
  /// Simulated seconds per wall second while executing; 0 runs unpaced.
  double realtime_factor = 1.0;
  /// Run plans on a worker thread (server) or inside the call (tools, tests).
  bool async_execution = true;
  std::size_t event_buffer = 4096;

  /// Missing keys keep their defaults. Throws InvalidFormat.
  static GatewayConfig from_json(const nlohmann::json &j);
  static GatewayConfig load(const std::filesystem::path &file);
  /// BABELBOT_LLM_ENDPOINT/_MODEL/_KEY, BABELBOT_MOCK_LLM, BABELBOT_FIXTURES,
  /// BABELBOT_MAP, BABELBOT_LOG_DIR, BABELBOT_RESOURCES, BABELBOT_PORT,
  /// BABELBOT_TOKEN, BABELBOT_PERCEPTION (path to a JSON file).
  void apply_env();
  void validate() const;
  [[nodiscard]] nlohmann::json to_json() const;
};

/// Read-only data shared by every session.
struct Resources {
  langid::LanguageProfileSet profiles;
  engine::LexiconSet lexicons;
  exec::ResponseCatalog responses;
  perception::SynonymTable synonyms;
  std::map<std::string, sim::OccupancyGrid> maps; // by file stem
  std::optional<engine::FixtureCorpus> fixtures;

  static Resources load(const std::filesystem::path &dir, const std::filesystem::path &fixtures = {});
};

// ---------------------------------------------------------------------------
// Events

struct Event {
  std::uint64_t seq = 0;
  std::string type;
  std::string session;
  std::string language;
  std::int64_t at_ms = 0;
  nlohmann::json body = nlohmann::json::object();
};

nlohmann::json to_json(const Event &e);

using EventCallback = std::function<void(const Event &)>;

// ---------------------------------------------------------------------------
// Persistence

/// Append-only JSONL file. Each line goes out in a single write; a torn final
/// line left by a crash is cut off when the file is reopened.
class JsonlWriter {
public:
  explicit JsonlWriter(std::filesystem::path file);
  ~JsonlWriter();
  JsonlWriter(const JsonlWriter &) = delete;
  JsonlWriter &operator=(const JsonlWriter &) = delete;

  void append(const nlohmann::json &line);
  [[nodiscard]] const std::filesystem::path &path() const { return path_; }
  /// Bytes dropped from a torn tail when the file was opened.
  [[nodiscard]] std::size_t repaired_bytes() const { return repaired_; }

private:
  std::filesystem::path path_;
  int fd_ = -1;
  std::size_t repaired_ = 0;
  std::mutex mutex_;
};

/// Cuts a file back to its last newline. Returns the number of bytes removed.
std::size_t repair_jsonl_tail(const std::filesystem::path &file);

// ---------------------------------------------------------------------------
// Sessions

/// Reference labels for a turn. Only annotated turns become "interaction"
/// log lines; the rest are logged as "turn" and ignored by replay.
struct TurnAnnotation {
  std::string lang;
  std::vector<std::string> gold_actions;
};

struct CommandResult {
  std::string reply_text;
  std::string language;
  std::string summary;            // prose around the action lines
  std::vector<std::string> plan;  // "Action k: ..." lines, empty when none
  bool needs_confirmation = false;
  bool executing = false;         // async execution started
  std::optional<exec::ExecutionTrace> trace; // synchronous execution
};

struct ConfirmResult {
  bool executed = false;
  bool reprompt = false;
  std::string reply_text;
  std::string language;
  std::optional<exec::ExecutionTrace> trace;
};

struct SessionOptions {
  std::string id;  // empty picks a fresh one
  std::string map; // empty uses the configured default
  std::optional<std::string> language_override;
};

class Session;

/// Owns every session; all public methods are thread-safe.
class SessionManager {
public:
  SessionManager(GatewayConfig config, const Resources &resources, engine::LanguageModelClient &client,
                 const Clock &clock);
  ~SessionManager();
  SessionManager(const SessionManager &) = delete;
  SessionManager &operator=(const SessionManager &) = delete;

  /// Reopens the log of an existing id. Throws InvalidFormat for an unknown map.
  std::string create_session(const SessionOptions &options = {});
  [[nodiscard]] bool has_session(const std::string &id) const;

  /// Throws SessionUnknown, SessionBusy, EmptyText, LlmTimeout, LlmProtocolError.
  CommandResult submit_command(const std::string &id, const std::string &text,
                               const std::optional<TurnAnnotation> &annotation = std::nullopt);
  /// Throws SessionUnknown, SessionBusy, NoPendingPlan.
  ConfirmResult confirm(const std::string &id, const std::string &reply);
  /// True when a running plan was asked to stop. Throws SessionUnknown.
  bool abort(const std::string &id);
  /// "auto" clears the override. Throws SessionUnknown.
  langid::LanguageTag set_language(const std::string &id, const std::string &code);
  [[nodiscard]] nlohmann::json state(const std::string &id) const;

  /// Puts the robot back at "home" (or the origin) with a fresh world and language state.
  void reset_world(const std::string &id, std::uint64_t render_seed = 1);
  /// Blocks until no plan is running in the session.
  void wait_idle(const std::string &id) const;

  /// Replays buffered events with seq > after_seq, then streams new ones.
  /// Throws SessionUnknown.
  std::uint64_t subscribe(const std::string &id, EventCallback callback, std::uint64_t after_seq = 0);
  void unsubscribe(const std::string &id, std::uint64_t token);
  /// Emits a heartbeat for every idle session quiet for heartbeat_ms.
  void pump_heartbeats();

  /// Interaction and turn lines already in the session log.
  [[nodiscard]] std::size_t logged_turns(const std::string &id) const;
  [[nodiscard]] std::filesystem::path log_path(const std::string &id) const;
  [[nodiscard]] const GatewayConfig &config() const { return config_; }
  [[nodiscard]] const Resources &resources() const { return resources_; }

private:
  std::shared_ptr<Session> find(const std::string &id) const;

  GatewayConfig config_;
  const Resources &resources_;
  engine::LanguageModelClient &client_;
  const Clock &clock_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

} // namespace babelbot::gateway
