#include "babelbot/gateway.hpp"

#include "babelbot/error.hpp"
#include "babelbot/text.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

namespace babelbot::gateway {

namespace fs = std::filesystem;
using nlohmann::json;

std::int64_t SystemClock::now_ms() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// ---------------------------------------------------------------------------
// Configuration

GatewayConfig GatewayConfig::from_json(const json &j) {
  GatewayConfig c;
  try {
    c.resources_dir = j.value("resources_dir", c.resources_dir.string());
    c.data_dir = j.value("data_dir", c.data_dir.string());
    c.default_map = j.value("default_map", c.default_map);
    c.default_language = j.value("default_language", c.default_language);
    if (j.contains("llm")) {
      const auto &l = j.at("llm");
      c.llm.endpoint = l.value("endpoint", c.llm.endpoint);
      c.llm.model = l.value("model", c.llm.model);
      c.llm.api_key = l.value("api_key", c.llm.api_key);
      c.llm.timeout_s = l.value("timeout_s", c.llm.timeout_s);
      c.llm.temperature = l.value("temperature", c.llm.temperature);
      c.llm.max_tokens = l.value("max_tokens", c.llm.max_tokens);
    }
    c.mock_llm = j.value("mock_llm", c.mock_llm);
    c.fixtures = j.value("fixtures", c.fixtures.string());
    if (j.contains("perception")) {
      c.perception = perception::PerceptionConfig::from_json(j.at("perception"));
    }
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.bearer_token = j.value("bearer_token", c.bearer_token);
    c.telemetry_hz = j.value("telemetry_hz", c.telemetry_hz);
    c.heartbeat_ms = j.value("heartbeat_ms", c.heartbeat_ms);
    c.realtime_factor = j.value("realtime_factor", c.realtime_factor);
    c.async_execution = j.value("async_execution", c.async_execution);
    c.event_buffer = j.value("event_buffer", c.event_buffer);
  } catch (const json::exception &e) {
    fail(ErrorCode::InvalidFormat, std::string("gateway config: ") + e.what());
  }
  c.validate();
  return c;
}

GatewayConfig GatewayConfig::load(const fs::path &file) {
  std::ifstream in(file);
  if (!in) {
    fail(ErrorCode::IoError, "cannot read " + file.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    fail(ErrorCode::InvalidFormat, file.string() + ": " + e.what());
  }
  return from_json(j);
}

void GatewayConfig::apply_env() {
  llm.apply_env();
  const auto env = [](const char *name) -> std::optional<std::string> {
    const char *v = std::getenv(name);
    if (v == nullptr || *v == '\0') {
      return std::nullopt;
    }
    return std::string(v);
  };
  if (auto v = env("BABELBOT_MOCK_LLM")) {
    mock_llm = *v == "1" || *v == "true";
  }
  if (auto v = env("BABELBOT_FIXTURES")) {
    fixtures = *v;
  }
  if (auto v = env("BABELBOT_MAP")) {
    default_map = *v;
  }
  if (auto v = env("BABELBOT_LOG_DIR")) {
    data_dir = *v;
  }
  if (auto v = env("BABELBOT_RESOURCES")) {
    resources_dir = *v;
  }
  if (auto v = env("BABELBOT_PORT")) {
    try {
      port = std::stoi(*v);
    } catch (const std::exception &) {
      fail(ErrorCode::InvalidFormat, "BABELBOT_PORT is not a number");
    }
  }
  if (auto v = env("BABELBOT_TOKEN")) {
    bearer_token = *v;
  }
  if (auto v = env("BABELBOT_PERCEPTION")) {
    std::ifstream in(*v);
    if (!in) {
      fail(ErrorCode::IoError, "cannot read " + *v);
    }
    try {
      perception = perception::PerceptionConfig::from_json(json::parse(in));
    } catch (const json::exception &e) {
      fail(ErrorCode::InvalidFormat, *v + ": " + e.what());
    }
  }
  validate();
}

void GatewayConfig::validate() const {
  if (port < 0 || port > 65535) {
    fail(ErrorCode::InvalidFormat, "port out of range");
  }
  if (telemetry_hz < 10) {
    fail(ErrorCode::InvalidFormat, "telemetry_hz must be at least 10");
  }
  if (heartbeat_ms <= 0 || realtime_factor < 0 || event_buffer == 0) {
    fail(ErrorCode::InvalidFormat, "gateway config out of range");
  }
  perception.validate();
}

json GatewayConfig::to_json() const {
  return {{"resources_dir", resources_dir.string()},
          {"data_dir", data_dir.string()},
          {"default_map", default_map},
          {"default_language", default_language},
          {"llm", {{"endpoint", llm.endpoint}, {"model", llm.model}, {"timeout_s", llm.timeout_s},
                   {"temperature", llm.temperature}, {"max_tokens", llm.max_tokens}}},
          {"mock_llm", mock_llm},
          {"fixtures", fixtures.string()},
          {"perception", {{"softmax_temperature", perception.temperature},
                          {"q_thresh", perception.q_thresh},
                          {"e_thresh", perception.e_thresh},
                          {"beta", perception.beta},
                          {"lambda1", perception.lambda1},
                          {"lambda2", perception.lambda2},
                          {"source_confidence_floor", perception.source_confidence_floor},
                          {"neighborhood_radius", perception.neighborhood_radius}}},
          {"host", host},
          {"port", port},
          {"telemetry_hz", telemetry_hz},
          {"heartbeat_ms", heartbeat_ms},
          {"realtime_factor", realtime_factor},
          {"async_execution", async_execution},
          {"event_buffer", event_buffer}};
}

Resources Resources::load(const fs::path &dir, const fs::path &fixtures) {
  Resources r{langid::LanguageProfileSet::load_directory(dir / "profiles"),
              engine::LexiconSet::load_directory(dir / "lexicon"),
              exec::ResponseCatalog::load_directory(dir / "responses"),
              perception::SynonymTable::load(dir / "synonyms.json"),
              {},
              std::nullopt};
  std::error_code ec;
  for (const auto &e : fs::directory_iterator(dir / "maps", ec)) {
    if (e.path().extension() == ".json") {
      r.maps.emplace(e.path().stem().string(), sim::OccupancyGrid::load(e.path()));
    }
  }
  if (ec) {
    fail(ErrorCode::IoError, "cannot list " + (dir / "maps").string());
  }
  if (!fixtures.empty()) {
    r.fixtures = engine::FixtureCorpus::load_jsonl(fixtures);
  }
  return r;
}

json to_json(const Event &e) {
  json j = e.body;
  j["seq"] = e.seq;
  j["type"] = e.type;
  j["session"] = e.session;
  j["language"] = e.language;
  j["at_ms"] = e.at_ms;
  return j;
}

// ---------------------------------------------------------------------------
// Persistence

std::size_t repair_jsonl_tail(const fs::path &file) {
  std::error_code ec;
  const auto size = fs::file_size(file, ec);
  if (ec || size == 0) {
    return 0;
  }
  std::ifstream in(file, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (content.back() == '\n') {
    return 0;
  }
  const auto last_nl = content.rfind('\n');
  const std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
  fs::resize_file(file, keep, ec);
  if (ec) {
    fail(ErrorCode::IoError, "cannot truncate " + file.string() + ": " + ec.message());
  }
  return content.size() - keep;
}

JsonlWriter::JsonlWriter(fs::path file) : path_(std::move(file)) {
  if (path_.has_parent_path()) {
    fs::create_directories(path_.parent_path());
  }
  repaired_ = repair_jsonl_tail(path_);
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    fail(ErrorCode::IoError, "cannot open " + path_.string());
  }
}

JsonlWriter::~JsonlWriter() {
  if (fd_ >= 0) {
    ::close(fd_);
  }
}

void JsonlWriter::append(const json &line) {
  const std::string s = line.dump() + "\n";
  std::lock_guard lock(mutex_);
  std::size_t off = 0;
  while (off < s.size()) {
    const auto n = ::write(fd_, s.data() + off, s.size() - off);
    if (n < 0) {
      if (errno == EINTR) {
        continue;
      }
      fail(ErrorCode::IoError, "write failed on " + path_.string());
    }
    off += static_cast<std::size_t>(n);
  }
}

// ---------------------------------------------------------------------------
// Session

namespace {

struct PendingTurn {
  engine::ActionPlan plan;
  std::string text;
  std::int64_t t_ins = 0;
  std::int64_t t_res = 0;
  std::optional<TurnAnnotation> annotation;
  int turn = 0;
};

json pose_json(const sim::Pose2 &p) { return {{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }

std::string new_session_id(std::uint64_t n, std::int64_t now) {
  std::ostringstream os;
  os << "s" << std::hex << now << "-" << n;
  return os.str();
}

bool valid_session_id(const std::string &id) {
  return !id.empty() && id.size() <= 64 && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' || c == '_';
  });
}

} // namespace

class Session {
public:
  Session(std::string id_, std::string map_, const sim::OccupancyGrid &grid_, const GatewayConfig &config,
          const Resources &res)
      : id(std::move(id_)), map_name(std::move(map_)), grid(&grid_), config_(&config), resources_(&res) {
    rebuild_world(1);
    log = std::make_unique<JsonlWriter>(config.data_dir / (id + ".jsonl"));
    std::ifstream in(log->path());
    for (std::string line; std::getline(in, line);) {
      if (line.find("\"type\":\"interaction\"") != std::string::npos ||
          line.find("\"type\":\"turn\"") != std::string::npos) {
        ++logged_turns;
      }
    }
    turn = static_cast<int>(logged_turns);
  }

  void rebuild_world(std::uint64_t seed) {
    world = std::make_unique<exec::World>(*grid, resources_->synonyms);
    world->perception_config = config_->perception;
    world->render_seed = seed;
    sim::Pose2 home;
    if (const auto it = grid->destinations.find("home"); it != grid->destinations.end()) {
      home.x = it->second.x();
      home.y = it->second.y();
      if (const auto yaw = grid->destination_yaw_deg.find("home"); yaw != grid->destination_yaw_deg.end()) {
        home.theta = yaw->second * std::numbers::pi / 180.0;
      }
    }
    world->simulator.reset(home);
    std::lock_guard lock(ev_mu);
    last_state = world->simulator.state();
    sim_time = world->simulator.time();
  }

  std::string language_code() const {
    std::lock_guard lock(ev_mu);
    return current_language;
  }

  void set_language_code(const std::string &code) {
    std::lock_guard lock(ev_mu);
    current_language = code;
  }

  /// Every event carries the session language at the moment it is emitted.
  void emit(const std::string &type, json body, std::int64_t now) {
    std::lock_guard lock(ev_mu);
    Event e{++seq, type, id, current_language, now, std::move(body)};
    buffer.push_back(e);
    while (buffer.size() > config_->event_buffer) {
      buffer.pop_front();
    }
    last_event_ms = now;
    for (auto &[_, cb] : subscribers) {
      cb(e);
    }
  }

  std::string id;
  std::string map_name;
  const sim::OccupancyGrid *grid;
  const GatewayConfig *config_;
  const Resources *resources_;

  // touched only by the holder of `busy`
  std::unique_ptr<exec::World> world;
  double speed_ceiling = engine::kMaxLinearSpeed;

  mutable std::mutex mu; // language state, pending plan, turn counter, executing
  std::condition_variable idle_cv;
  langid::SessionLanguageState language;
  std::optional<PendingTurn> pending;
  int turn = 0;
  std::size_t logged_turns = 0;
  bool executing = false;

  std::atomic<bool> busy{false};
  std::atomic<bool> abort_flag{false};
  std::thread worker;

  mutable std::mutex ev_mu; // events, subscribers, telemetry snapshot
  std::string current_language;
  std::deque<Event> buffer;
  std::uint64_t seq = 0;
  std::map<std::uint64_t, EventCallback> subscribers;
  std::uint64_t next_subscriber = 1;
  std::int64_t last_event_ms = 0;
  sim::RobotState last_state;
  double sim_time = 0.0;

  std::unique_ptr<JsonlWriter> log;
};

namespace {

/// Holds a session's `busy` flag for the life of a command.
class BusyGuard {
public:
  explicit BusyGuard(Session &s) : s_(&s) {
    bool expected = false;
    if (!s.busy.compare_exchange_strong(expected, true)) {
      fail(ErrorCode::SessionBusy, "session " + s.id + " is processing another command");
    }
    if (s.worker.joinable()) {
      s.worker.join();
    }
  }
  ~BusyGuard() {
    if (s_ != nullptr) {
      s_->busy.store(false);
    }
  }
  BusyGuard(const BusyGuard &) = delete;
  BusyGuard &operator=(const BusyGuard &) = delete;
  /// Hands the flag to a worker thread.
  void release_to_worker() { s_ = nullptr; }

private:
  Session *s_;
};

class TelemetryObserver final : public exec::ExecutionObserver {
public:
  TelemetryObserver(Session &s, const Clock &clock, const GatewayConfig &config)
      : s_(s), clock_(clock), factor_(config.realtime_factor) {
    const double dt = s.world->simulator.dt();
    every_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(1.0 / (config.telemetry_hz * dt) + 1e-9)));
    wall_start_ = std::chrono::steady_clock::now();
    sim_start_ = s.world->simulator.time();
  }

  void on_tick(const sim::RobotState &state, std::size_t action_index, double time) override {
    {
      std::lock_guard lock(s_.ev_mu);
      s_.last_state = state;
      s_.sim_time = time;
    }
    if (++ticks_ % every_ == 0) {
      s_.emit("telemetry",
              {{"pose", pose_json(state.pose)},
               {"v", state.v},
               {"omega", state.omega},
               {"action_index", action_index},
               {"status", "Running"},
               {"t", time}},
              clock_.now_ms());
    }
    if (factor_ > 0) {
      const auto target = wall_start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                            std::chrono::duration<double>((time - sim_start_) / factor_));
      std::this_thread::sleep_until(target);
    }
  }

  void on_action_end(std::size_t action_index, const exec::ActionRecord &record) override {
    s_.emit("action",
            {{"action_index", action_index},
             {"primitive", record.primitive},
             {"status", std::string(exec::to_string(record.status))},
             {"detail", record.detail},
             {"started_at", record.started_at},
             {"ended_at", record.ended_at}},
            clock_.now_ms());
  }

  void on_response(const exec::QueryResponse &response) override {
    json body{{"message", response.text}, {"fallback", response.fallback}, {"data", response.data}};
    if (response.snapshot) {
      body["snapshot"] = *response.snapshot;
    }
    s_.emit("response", std::move(body), clock_.now_ms());
  }

private:
  Session &s_;
  const Clock &clock_;
  double factor_;
  std::size_t every_ = 1;
  std::size_t ticks_ = 0;
  std::chrono::steady_clock::time_point wall_start_;
  double sim_start_ = 0.0;
};

std::string render(const Resources &res, const std::string &key, const std::string &lang,
                   const std::map<std::string, std::string> &values = {}) {
  return res.responses.render(key, lang, values).text;
}

/// Log line for a finished turn; annotated turns are the ones replay scores.
void log_turn(Session &s, const PendingTurn &t, const std::vector<std::string> &pred, int success,
              const std::string &lang) {
  json line;
  if (t.annotation) {
    metrics::InteractionRecord r;
    r.text = t.text;
    r.lang = t.annotation->lang.empty() ? lang : t.annotation->lang;
    r.t_ins_ms = t.t_ins;
    r.t_res_ms = t.t_res;
    r.gold_actions = t.annotation->gold_actions;
    r.pred_actions = pred;
    r.success = success;
    line = metrics::to_json(r);
    line["type"] = "interaction";
  } else {
    line = {{"type", "turn"},        {"lang", lang},         {"text", t.text}, {"t_ins_ms", t.t_ins},
            {"t_res_ms", t.t_res},   {"pred_actions", pred}, {"success", success}};
  }
  line["turn"] = t.turn;
  line["session"] = s.id;
  s.log->append(line);
  std::lock_guard lock(s.mu);
  ++s.logged_turns;
}

struct PlanOutcome {
  exec::ExecutionTrace trace;
  std::string reply;
};

/// Runs a plan to completion on the calling thread, then logs and announces it.
PlanOutcome run_plan(Session &s, const PendingTurn &turn, exec::Approval approval, const Resources &res,
                     const GatewayConfig &config, const Clock &clock) {
  const std::string lang = s.language_code();
  TelemetryObserver observer(s, clock, config);
  exec::ExecutionContext ctx;
  ctx.session_id = s.id;
  ctx.turn = turn.turn;
  ctx.language = lang;
  ctx.instruction = turn.text;
  ctx.responses = &res.responses;
  ctx.snapshot_dir = config.data_dir;
  ctx.speed_ceiling = s.speed_ceiling;
  ctx.abort = &s.abort_flag;
  ctx.observer = &observer;

  PlanOutcome out;
  out.trace = exec::execute_plan(turn.plan, approval, *s.world, ctx);
  s.speed_ceiling = ctx.speed_ceiling;
  {
    std::lock_guard lock(s.ev_mu);
    s.last_state = s.world->simulator.state();
    s.sim_time = s.world->simulator.time();
  }

  std::string status;
  if (approval == exec::Approval::Rejected) {
    status = "Rejected";
    out.reply = render(res, "plan_discarded", lang);
  } else if (out.trace.aborted) {
    status = "Aborted";
    out.reply = render(res, "aborted", lang);
  } else if (out.trace.s_n == 0) {
    status = "Failed";
    std::string detail;
    for (const auto &a : out.trace.per_action) {
      if (a.status == exec::ActionStatus::Failed) {
        detail = a.detail;
        break;
      }
    }
    if (detail.empty() && turn.plan.parse_failed()) {
      detail = turn.plan.unparsed_lines.front();
    }
    out.reply = render(res, "execution_failed", lang, {{"detail", detail}});
  } else {
    status = "Completed";
    std::string joined;
    for (const auto &r : out.trace.responses) {
      joined += (joined.empty() ? "" : "\n") + r.text;
    }
    out.reply = joined.empty() ? render(res, "executed", lang) : joined;
  }

  json trace_line = exec::to_json(out.trace);
  trace_line["type"] = "trace";
  trace_line["turn"] = turn.turn;
  trace_line["session"] = s.id;
  trace_line["status"] = status;
  s.log->append(trace_line);
  log_turn(s, turn, engine::canonical_actions(turn.plan), out.trace.s_n, lang);

  s.emit("execution",
         {{"status", status},
          {"s_n", out.trace.s_n},
          {"pose", pose_json(out.trace.final_pose)},
          {"message", out.reply},
          {"turn", turn.turn}},
         clock.now_ms());
  return out;
}

} // namespace

// ---------------------------------------------------------------------------
// SessionManager

SessionManager::SessionManager(GatewayConfig config, const Resources &resources, engine::LanguageModelClient &client,
                               const Clock &clock)
    : config_(std::move(config)), resources_(resources), client_(client), clock_(clock) {
  config_.validate();
  fs::create_directories(config_.data_dir);
}

SessionManager::~SessionManager() {
  std::lock_guard lock(mutex_);
  for (auto &[_, s] : sessions_) {
    s->abort_flag.store(true);
    if (s->worker.joinable()) {
      s->worker.join();
    }
  }
}

std::shared_ptr<Session> SessionManager::find(const std::string &id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    fail(ErrorCode::SessionUnknown, "no session " + id);
  }
  return it->second;
}

bool SessionManager::has_session(const std::string &id) const {
  std::lock_guard lock(mutex_);
  return sessions_.count(id) > 0;
}

std::string SessionManager::create_session(const SessionOptions &options) {
  const std::string map = options.map.empty() ? config_.default_map : options.map;
  const auto grid = resources_.maps.find(map);
  if (grid == resources_.maps.end()) {
    fail(ErrorCode::InvalidFormat, "unknown map " + map);
  }
  std::string id;
  {
    std::lock_guard lock(mutex_);
    id = options.id.empty() ? new_session_id(next_id_++, clock_.now_ms()) : options.id;
    if (!valid_session_id(id)) {
      fail(ErrorCode::InvalidFormat, "session ids use letters, digits, '-' and '_' only");
    }
    if (sessions_.count(id) > 0) {
      return id;
    }
  }
  auto s = std::make_shared<Session>(id, map, grid->second, config_, resources_);
  const auto now = clock_.now_ms();
  s->language.current = langid::make_tag(config_.default_language, langid::default_script(config_.default_language));
  if (options.language_override) {
    s->language.set_override(langid::make_tag(*options.language_override,
                                              langid::default_script(*options.language_override)),
                             now);
  }
  s->set_language_code(s->language.current.code);
  s->log->append({{"type", "session"},
                  {"session", id},
                  {"map", map},
                  {"at_ms", now},
                  {"language", s->language.current.code},
                  {"reopened", s->logged_turns > 0}});
  {
    std::lock_guard lock(mutex_);
    const auto [it, inserted] = sessions_.emplace(id, s);
    if (!inserted) {
      return id;
    }
  }
  s->emit("session", {{"map", map}, {"pose", pose_json(s->world->simulator.state().pose)}}, now);
  return id;
}

CommandResult SessionManager::submit_command(const std::string &id, const std::string &text,
                                             const std::optional<TurnAnnotation> &annotation) {
  auto s = find(id);
  BusyGuard guard(*s);
  const auto t_ins = clock_.now_ms();
  if (text::trim(text).empty()) {
    fail(ErrorCode::EmptyText, "command text is empty");
  }

  langid::LanguageTag lang;
  PendingTurn turn;
  {
    std::lock_guard lock(s->mu);
    langid::LanguageTag detected = s->language.current;
    try {
      detected = langid::detect_language(text, resources_.profiles);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::NoProfileMatch) {
        throw;
      }
    }
    lang = langid::resolve_session_language(s->language, detected, t_ins);
    if (s->pending) {
      // a new command supersedes the parked plan
      turn = std::move(*s->pending);
      s->pending.reset();
    }
    s->turn += 1;
  }
  if (!turn.text.empty()) {
    log_turn(*s, turn, engine::canonical_actions(turn.plan), 1, lang.code);
    s->emit("plan_discarded", {{"turn", turn.turn}}, t_ins);
  }
  s->set_language_code(lang.code);
  turn = PendingTurn{};
  turn.text = text;
  turn.t_ins = t_ins;
  turn.annotation = annotation;
  {
    std::lock_guard lock(s->mu);
    turn.turn = s->turn;
  }
  s->emit("command", {{"text", text}, {"turn", turn.turn}}, t_ins);

  CommandResult result;
  result.language = lang.code;

  const auto &pose = s->world->simulator.state().pose;
  engine::RobotContext robot;
  robot.x = pose.x;
  robot.y = pose.y;
  robot.yaw_deg = pose.theta * 180.0 / std::numbers::pi;
  robot.max_speed = s->speed_ceiling;
  std::vector<std::string> destinations;
  for (const auto &[name, _] : s->grid->destinations) {
    destinations.push_back(name);
  }
  if (destinations.empty()) {
    destinations.emplace_back("home");
  }
  const auto prompt = engine::build_system_prompt(robot, destinations, lang);
  engine::Instruction instruction{text, lang, t_ins, s->id};

  const auto finish_without_plan = [&](const std::string &reply, int success, std::vector<std::string> pred) {
    turn.t_res = clock_.now_ms();
    log_turn(*s, turn, pred, success, lang.code);
    s->emit("reply", {{"message", reply}, {"turn", turn.turn}}, turn.t_res);
    result.reply_text = reply;
    return result;
  };

  engine::Interpretation interp;
  try {
    interp = engine::interpret(instruction, prompt, client_, config_.llm);
  } catch (const Error &e) {
    if (e.code() == ErrorCode::NoFixture) {
      return finish_without_plan(render(resources_, "not_understood", lang.code), 0, {});
    }
    if (e.code() == ErrorCode::LlmTimeout || e.code() == ErrorCode::LlmProtocolError) {
      finish_without_plan(render(resources_, "llm_unavailable", lang.code), 0, {});
    }
    throw;
  }
  result.summary = interp.summary;

  try {
    turn.plan = engine::parse_action_lines(interp.plan_lines, lang, client_.provenance());
  } catch (const Error &e) {
    if (e.code() != ErrorCode::NonmonotoneNumbering && e.code() != ErrorCode::NegativeParameter) {
      throw;
    }
    return finish_without_plan(render(resources_, "not_understood", lang.code), 0, interp.plan_lines);
  }
  result.plan = engine::format_plan_lines(turn.plan);

  if (turn.plan.actions.empty() && !turn.plan.parse_failed()) {
    const std::string reply = text::trim(interp.summary);
    if (reply.empty()) {
      return finish_without_plan(render(resources_, "not_understood", lang.code), 0, {});
    }
    return finish_without_plan(reply, 1, {});
  }
  turn.t_res = clock_.now_ms();

  if (turn.plan.requires_confirmation && !turn.plan.parse_failed()) {
    result.needs_confirmation = true;
    result.reply_text = render(resources_, "plan_confirm", lang.code);
    s->emit("plan",
            {{"plan", result.plan}, {"needs_confirmation", true}, {"message", result.reply_text},
             {"summary", interp.summary}, {"turn", turn.turn}},
            turn.t_res);
    std::lock_guard lock(s->mu);
    s->pending = std::move(turn);
    return result;
  }

  s->emit("plan",
          {{"plan", result.plan}, {"needs_confirmation", false}, {"summary", interp.summary}, {"turn", turn.turn}},
          turn.t_res);
  {
    std::lock_guard lock(s->mu);
    s->executing = true;
  }
  s->abort_flag.store(false);
  const auto finish = [s](auto &&body) {
    try {
      body();
    } catch (...) {
      std::lock_guard lock(s->mu);
      s->executing = false;
      s->idle_cv.notify_all();
      throw;
    }
    std::lock_guard lock(s->mu);
    s->executing = false;
    s->idle_cv.notify_all();
  };
  if (config_.async_execution) {
    result.executing = true;
    result.reply_text = text::trim(interp.summary);
    guard.release_to_worker();
    s->worker = std::thread([s, turn = std::move(turn), this] {
      try {
        run_plan(*s, turn, exec::Approval::Approved, resources_, config_, clock_);
      } catch (const std::exception &e) {
        s->emit("error", {{"message", e.what()}}, clock_.now_ms());
      }
      {
        std::lock_guard lock(s->mu);
        s->executing = false;
      }
      s->busy.store(false);
      s->idle_cv.notify_all();
    });
    return result;
  }
  finish([&] {
    auto outcome = run_plan(*s, turn, exec::Approval::Approved, resources_, config_, clock_);
    result.reply_text = outcome.reply;
    result.trace = std::move(outcome.trace);
  });
  return result;
}

ConfirmResult SessionManager::confirm(const std::string &id, const std::string &reply) {
  auto s = find(id);
  BusyGuard guard(*s);
  PendingTurn turn;
  langid::LanguageTag tag;
  {
    std::lock_guard lock(s->mu);
    if (!s->pending) {
      fail(ErrorCode::NoPendingPlan, "session " + id + " has no plan awaiting confirmation");
    }
    tag = s->language.current;
  }
  const std::string lang = tag.code;
  ConfirmResult result;
  result.language = lang;
  engine::ConfirmationDecision decision;
  try {
    decision = engine::classify_confirmation(reply, tag, resources_.lexicons);
  } catch (const Error &e) {
    if (e.code() != ErrorCode::Indeterminate) {
      throw;
    }
    result.reprompt = true;
    result.reply_text = render(resources_, "reprompt", lang);
    s->emit("reply", {{"message", result.reply_text}, {"reprompt", true}}, clock_.now_ms());
    return result;
  }
  {
    std::lock_guard lock(s->mu);
    turn = std::move(*s->pending);
    s->pending.reset();
  }
  s->emit("confirmation", {{"value", decision.value}, {"matched", decision.matched_template}, {"turn", turn.turn}},
          clock_.now_ms());

  const auto approval = decision.value == 1 ? exec::Approval::Approved : exec::Approval::Rejected;
  result.executed = approval == exec::Approval::Approved;
  if (approval == exec::Approval::Approved) {
    std::lock_guard lock(s->mu);
    s->executing = true;
  }
  s->abort_flag.store(false);
  if (config_.async_execution && result.executed) {
    guard.release_to_worker();
    s->worker = std::thread([s, turn = std::move(turn), this] {
      try {
        run_plan(*s, turn, exec::Approval::Approved, resources_, config_, clock_);
      } catch (const std::exception &e) {
        s->emit("error", {{"message", e.what()}}, clock_.now_ms());
      }
      {
        std::lock_guard lock(s->mu);
        s->executing = false;
      }
      s->busy.store(false);
      s->idle_cv.notify_all();
    });
    return result;
  }
  try {
    auto outcome = run_plan(*s, turn, approval, resources_, config_, clock_);
    result.reply_text = outcome.reply;
    result.trace = std::move(outcome.trace);
  } catch (...) {
    std::lock_guard lock(s->mu);
    s->executing = false;
    s->idle_cv.notify_all();
    throw;
  }
  std::lock_guard lock(s->mu);
  s->executing = false;
  s->idle_cv.notify_all();
  return result;
}

bool SessionManager::abort(const std::string &id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  if (!s->executing) {
    return false;
  }
  s->abort_flag.store(true);
  return true;
}

langid::LanguageTag SessionManager::set_language(const std::string &id, const std::string &code) {
  auto s = find(id);
  const auto now = clock_.now_ms();
  langid::LanguageTag current;
  {
    std::lock_guard lock(s->mu);
    const std::string lowered = text::to_lower(text::trim(code));
    if (lowered.empty()) {
      fail(ErrorCode::InvalidFormat, "language code is empty");
    }
    if (lowered == "auto") {
      s->language.clear_override();
    } else {
      s->language.set_override(langid::make_tag(lowered, langid::default_script(lowered)), now);
    }
    current = s->language.current;
  }
  s->set_language_code(current.code);
  s->emit("language", {{"code", current.code}, {"override", code != "auto"}}, now);
  s->log->append({{"type", "language"}, {"session", id}, {"code", current.code}, {"at_ms", now}});
  return current;
}

json SessionManager::state(const std::string &id) const {
  auto s = find(id);
  json j;
  {
    std::lock_guard lock(s->mu);
    j["id"] = s->id;
    j["map"] = s->map_name;
    j["language"] = {{"code", s->language.current.code},
                     {"source", s->language.source == langid::LanguageSource::Override ? "override" : "detected"}};
    j["executing"] = s->executing;
    j["turn"] = s->turn;
    j["pending_plan"] = s->pending ? json(engine::format_plan_lines(s->pending->plan)) : json(nullptr);
  }
  j["busy"] = s->busy.load();
  {
    std::lock_guard lock(s->ev_mu);
    j["pose"] = pose_json(s->last_state.pose);
    j["collided"] = s->last_state.collided;
    j["sim_time"] = s->sim_time;
    j["seq"] = s->seq;
  }
  return j;
}

void SessionManager::reset_world(const std::string &id, std::uint64_t render_seed) {
  auto s = find(id);
  BusyGuard guard(*s);
  s->rebuild_world(render_seed);
  s->speed_ceiling = engine::kMaxLinearSpeed;
  {
    std::lock_guard lock(s->mu);
    s->pending.reset();
    s->language = langid::SessionLanguageState{};
    s->language.current = langid::make_tag(config_.default_language, langid::default_script(config_.default_language));
  }
  s->set_language_code(config_.default_language);
}

void SessionManager::wait_idle(const std::string &id) const {
  auto s = find(id);
  std::unique_lock lock(s->mu);
  s->idle_cv.wait(lock, [&] { return !s->executing; });
}

std::uint64_t SessionManager::subscribe(const std::string &id, EventCallback callback, std::uint64_t after_seq) {
  auto s = find(id);
  std::lock_guard lock(s->ev_mu);
  for (const auto &e : s->buffer) {
    if (e.seq > after_seq) {
      callback(e);
    }
  }
  const auto token = s->next_subscriber++;
  s->subscribers.emplace(token, std::move(callback));
  return token;
}

void SessionManager::unsubscribe(const std::string &id, std::uint64_t token) {
  std::shared_ptr<Session> s;
  {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) {
      return;
    }
    s = it->second;
  }
  std::lock_guard lock(s->ev_mu);
  s->subscribers.erase(token);
}

void SessionManager::pump_heartbeats() {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mutex_);
    for (const auto &[_, s] : sessions_) {
      all.push_back(s);
    }
  }
  const auto now = clock_.now_ms();
  for (const auto &s : all) {
    if (s->busy.load()) {
      continue;
    }
    sim::Pose2 pose;
    {
      std::lock_guard lock(s->ev_mu);
      if (now - s->last_event_ms < config_.heartbeat_ms) {
        continue;
      }
      pose = s->last_state.pose;
    }
    s->emit("heartbeat", {{"pose", pose_json(pose)}, {"status", "Idle"}}, now);
  }
}

std::size_t SessionManager::logged_turns(const std::string &id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return s->logged_turns;
}

fs::path SessionManager::log_path(const std::string &id) const { return find(id)->log->path(); }

} // namespace babelbot::gateway
