#include "babelbot/exec.hpp"

#include "babelbot/engine.hpp"
#include "babelbot/error.hpp"
#include "babelbot/quantity.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

namespace babelbot::exec {

using engine::ActionPrimitive;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

template <class... Ts> struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts> Overloaded(Ts...) -> Overloaded<Ts...>;

double turn_sign(engine::TurnDirection d) { return d == engine::TurnDirection::Left ? 1.0 : -1.0; }

} // namespace

bool goal_reached(const sim::Pose2 &pose, const GoalSpec &goal) {
  if (!(goal.tolerance > 0)) {
    fail(ErrorCode::PreconditionFailed, "goal tolerance must be positive");
  }
  return std::hypot(pose.x - goal.target.x(), pose.y - goal.target.y()) <= goal.tolerance;
}

// ---------------------------------------------------------------------------
// Responses

ResponseCatalog ResponseCatalog::load_directory(const std::filesystem::path &dir) {
  ResponseCatalog out;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    fail(ErrorCode::IoError, "response directory not found: " + dir.string());
  }
  for (const auto &entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") {
      continue;
    }
    std::ifstream in(entry.path());
    try {
      out.add(entry.path().stem().string(), nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception &e) {
      fail(ErrorCode::InvalidFormat, entry.path().string() + ": " + e.what());
    }
  }
  return out;
}

void ResponseCatalog::add(const std::string &language, nlohmann::json templates) {
  if (!templates.is_object()) {
    fail(ErrorCode::InvalidFormat, "response templates for " + language + " must be an object");
  }
  catalog_[language] = std::move(templates);
}

const nlohmann::json *ResponseCatalog::lookup(const std::string &language, const std::string &key) const {
  const auto it = catalog_.find(language);
  if (it == catalog_.end()) {
    return nullptr;
  }
  const auto k = it->second.find(key);
  return k == it->second.end() ? nullptr : &*k;
}

ResponseCatalog::Rendered ResponseCatalog::render(const std::string &key, const std::string &language,
                                                  const std::map<std::string, std::string> &values) const {
  Rendered out;
  out.language = language;
  const nlohmann::json *tpl = lookup(language, key);
  if (tpl == nullptr || !tpl->is_string()) {
    tpl = lookup("en", key);
    out.language = "en";
    out.fallback = language != "en";
  }
  if (tpl == nullptr || !tpl->is_string()) {
    fail(ErrorCode::InvalidFormat, "no response template '" + key + "'");
  }
  const auto &s = tpl->get_ref<const std::string &>();
  out.text.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '{') {
      const auto close = s.find('}', i);
      if (close != std::string::npos) {
        const auto v = values.find(s.substr(i + 1, close - i - 1));
        if (v != values.end()) {
          out.text += v->second;
          i = close;
          continue;
        }
      }
    }
    out.text += s[i];
  }
  return out;
}

std::string ResponseCatalog::word(const std::string &table, const std::string &key,
                                  const std::string &language) const {
  for (const std::string &lang : {language, std::string("en")}) {
    const nlohmann::json *t = lookup(lang, table);
    if (t != nullptr && t->is_object()) {
      const auto it = t->find(key);
      if (it != t->end() && it->is_string()) {
        return it->get<std::string>();
      }
    }
  }
  return key;
}

std::string format_for_language(double value, const std::string &language) {
  double r = std::round(value * 100.0) / 100.0;
  if (r == 0.0) {
    r = 0.0; // drop negative zero
  }
  std::string s = format_number(r);
  if (uses_decimal_comma(language)) {
    std::replace(s.begin(), s.end(), '.', ',');
  }
  return s;
}

// ---------------------------------------------------------------------------
// Compilation

std::vector<sim::TwistCommand> compile(const ActionPrimitive &action, const MotionLimits &limits) {
  const auto linear = [&](double requested) {
    return std::min({requested, limits.max_linear, engine::kMaxLinearSpeed});
  };
  const double turn_rate = std::min(limits.turn_rate, limits.max_angular);
  std::vector<sim::TwistCommand> out;
  const auto drive = [&](double d, double v) {
    if (d > 0) {
      out.push_back({v, 0.0, d / std::abs(v)});
    }
  };
  const auto turn = [&](double angle_rad, double sign) {
    if (angle_rad > 0) {
      out.push_back({0.0, sign * turn_rate, angle_rad / turn_rate});
    }
  };
  std::visit(Overloaded{
                 [&](const engine::MoveLinear &m) {
                   const double v = linear(m.speed);
                   drive(m.distance, m.direction == engine::LinearDirection::Forward ? v : -v);
                 },
                 [&](const engine::Rotate &r) {
                   const double w = std::min(r.angular_speed_deg * kDeg, limits.max_angular);
                   if (r.angle_deg > 0 && w > 0) {
                     out.push_back({0.0, turn_sign(r.direction) * w, r.angle_deg * kDeg / w});
                   }
                 },
                 [&](const engine::PatternMove &p) {
                   const double sign = turn_sign(p.turn);
                   double v = linear(p.speed);
                   switch (p.shape) {
                   case engine::PatternShape::Circle:
                   case engine::PatternShape::Arc: {
                     if (!(p.radius > 0)) {
                       fail(ErrorCode::PreconditionFailed, "pattern radius must be positive");
                     }
                     // keep the turn rate within bounds by slowing down on tight circles
                     v = std::min(v, limits.max_angular * p.radius);
                     const double sweep = p.shape == engine::PatternShape::Circle ? 2 * kPi : p.angle_deg * kDeg;
                     out.push_back({v, sign * v / p.radius, sweep * p.radius / v});
                     break;
                   }
                   case engine::PatternShape::Rectangle:
                     for (int k = 0; k < 2; ++k) {
                       drive(p.length, v);
                       turn(kPi / 2, sign);
                       drive(p.width, v);
                       turn(kPi / 2, sign);
                     }
                     break;
                   case engine::PatternShape::LShape:
                     drive(p.length, v);
                     turn(kPi / 2, sign);
                     drive(p.width, v);
                     break;
                   }
                 },
                 [&](const engine::Wait &w) {
                   if (w.seconds > 0) {
                     out.push_back({0.0, 0.0, w.seconds});
                   }
                 },
                 [](const auto &) {},
             },
             action.kind);
  return out;
}

std::vector<sim::TwistCommand> compile_path(const sim::Pose2 &start, const std::vector<Eigen::Vector2d> &waypoints,
                                            double speed, const MotionLimits &limits,
                                            std::optional<double> final_heading) {
  const double v = std::min({speed, limits.max_linear, engine::kMaxLinearSpeed});
  const double w = std::min(limits.turn_rate, limits.max_angular);
  if (!(v > 0) || !(w > 0)) {
    fail(ErrorCode::PreconditionFailed, "navigation needs positive speeds");
  }
  std::vector<sim::TwistCommand> out;
  double theta = start.theta;
  Eigen::Vector2d at(start.x, start.y);
  const auto face = [&](double heading) {
    const double d = sim::normalize_angle(heading - theta);
    if (std::abs(d) > 1e-9) {
      out.push_back({0.0, d > 0 ? w : -w, std::abs(d) / w});
    }
    theta = heading;
  };
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const Eigen::Vector2d delta = waypoints[i] - at;
    const double len = delta.norm();
    if (len < 1e-9) {
      continue;
    }
    face(std::atan2(delta.y(), delta.x()));
    out.push_back({v, 0.0, len / v});
    at = waypoints[i];
  }
  if (final_heading) {
    face(*final_heading);
  }
  return out;
}

sim::Pose2 nominal_end_pose(const sim::Pose2 &start, const std::vector<sim::TwistCommand> &twists) {
  sim::RobotState s;
  s.pose = start;
  for (const auto &t : twists) {
    if (t.duration > 0) {
      s = sim::step(s, t.v, t.omega, t.duration);
    }
  }
  return s.pose;
}

// ---------------------------------------------------------------------------
// World

World::World(sim::OccupancyGrid grid, const perception::SynonymTable &table)
    : simulator(std::move(grid)), synonyms(&table), vocabulary(table.labels()) {}

std::vector<Detection> observe(World &world) {
  const auto &sim = world.simulator;
  sim::RenderOptions opt;
  opt.vocabulary = world.vocabulary;
  // same pose and time give the same frame
  opt.seed = world.render_seed + static_cast<std::uint64_t>(std::llround(sim.time() / sim.dt()));
  const auto frame = sim::render_observation(sim.state(), sim.grid(), *world.synonyms, opt);
  const auto result = perception::run_pipeline(frame, world.perception_config, world.camera_mount);
  std::vector<Detection> out;
  const auto &pose = sim.state().pose;
  for (const auto &c : result.survivors) {
    Detection d;
    const std::size_t best = c.best_label();
    d.label = c.labels[best];
    d.p_prime = c.p_prime[best];
    d.labels = c.labels;
    d.p_primes = c.p_prime;
    d.world_point = sim::camera_to_world(c.point_cam, pose);
    d.distance = std::hypot(d.world_point.x() - pose.x, d.world_point.y() - pose.y);
    d.track_id = world.tracks.observe(d.label, d.world_point, d.p_prime, sim.time());
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Snapshots

std::vector<std::uint8_t> render_snapshot(const perception::PerceptionFrame &frame) {
  const int w = frame.depth.width, h = frame.depth.height;
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const float z = frame.depth.at(u, v);
      // floor below the horizon, wall colour above
      std::uint8_t g = v > h / 2 ? 150 : 200;
      if (std::isfinite(z)) {
        g = static_cast<std::uint8_t>(std::clamp(255.0 - 30.0 * z, 40.0, 255.0));
      }
      std::uint8_t *px = &rgb[(static_cast<std::size_t>(v) * w + u) * 3];
      px[0] = px[1] = px[2] = g;
    }
  }
  static constexpr std::uint8_t kPalette[][3] = {{230, 25, 75}, {60, 180, 75},  {0, 130, 200}, {245, 130, 48},
                                                 {145, 30, 180}, {70, 240, 240}, {240, 50, 230}, {210, 245, 60}};
  for (const auto &m : frame.masks) {
    const auto &c = kPalette[static_cast<std::size_t>(m.id) % std::size(kPalette)];
    for (const auto &p : m.pixels) {
      if (p.u < 0 || p.v < 0 || p.u >= w || p.v >= h) {
        continue;
      }
      std::uint8_t *px = &rgb[(static_cast<std::size_t>(p.v) * w + p.u) * 3];
      for (int k = 0; k < 3; ++k) {
        px[k] = static_cast<std::uint8_t>((px[k] + 3 * c[k]) / 4);
      }
    }
  }
  return rgb;
}

void write_png(const std::filesystem::path &file, int width, int height, const std::vector<std::uint8_t> &rgb) {
  if (width <= 0 || height <= 0 || rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    fail(ErrorCode::InvalidFormat, "image buffer does not match its size");
  }
  std::error_code ec;
  if (file.has_parent_path()) {
    std::filesystem::create_directories(file.parent_path(), ec);
  }
  std::unique_ptr<FILE, int (*)(FILE *)> fp(std::fopen(file.c_str(), "wb"), &std::fclose);
  if (!fp) {
    fail(ErrorCode::IoError, "cannot write " + file.string());
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    fail(ErrorCode::IoError, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::IoError, "libpng failed writing " + file.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, rgb.data() + static_cast<std::size_t>(y) * width * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// ---------------------------------------------------------------------------
// Queries

namespace {

QueryResponse respond(const ExecutionContext &ctx, const std::string &key,
                      const std::map<std::string, std::string> &values = {}) {
  QueryResponse r;
  if (ctx.responses == nullptr) {
    fail(ErrorCode::PreconditionFailed, "no response catalogue configured");
  }
  auto rendered = ctx.responses->render(key, ctx.language, values);
  r.text = std::move(rendered.text);
  r.language = rendered.language;
  r.fallback = rendered.fallback;
  return r;
}

std::string yaw_degrees(double theta) {
  double deg = theta / kDeg;
  if (deg < 0) {
    deg += 360.0;
  }
  return format_number(std::round(deg * 10.0) / 10.0 >= 360.0 ? 0.0 : std::round(deg * 10.0) / 10.0);
}

} // namespace

QueryResponse handle_query(const ActionPrimitive &query, World &world, ExecutionContext &ctx, int snapshot_index) {
  const auto &pose = world.simulator.state().pose;
  const auto num = [&](double x) { return format_for_language(x, ctx.language); };
  if (query.is<engine::ReportPose>()) {
    const std::string yaw = yaw_degrees(pose.theta);
    const std::string compass = engine::compass_direction(pose.theta / kDeg);
    auto r = respond(ctx, "pose",
                     {{"x", num(pose.x)},
                      {"y", num(pose.y)},
                      {"yaw", uses_decimal_comma(ctx.language) ? num(std::stod(yaw)) : yaw},
                      {"compass", ctx.responses->word("compass", compass, ctx.language)}});
    r.data = {{"x", pose.x},
              {"y", pose.y},
              {"yaw_deg", std::stod(yaw)},
              {"facing", compass},
              {"odom_distance", world.simulator.state().odom_distance}};
    return r;
  }
  if (query.is<engine::DescribeSurroundings>()) {
    auto detections = observe(world);
    if (detections.empty()) {
      auto r = respond(ctx, "surroundings_none");
      r.data = {{"objects", nlohmann::json::array()}};
      return r;
    }
    std::stable_sort(detections.begin(), detections.end(),
                     [](const Detection &a, const Detection &b) { return a.distance < b.distance; });
    auto r = respond(ctx, "surroundings_header");
    r.data = {{"objects", nlohmann::json::array()}};
    for (std::size_t i = 0; i < detections.size(); ++i) {
      const auto &d = detections[i];
      const auto item = respond(ctx, "surroundings_item",
                                {{"label", ctx.responses->word("labels", d.label, ctx.language)},
                                 {"p", format_for_language(std::round(d.p_prime * 100.0), ctx.language)},
                                 {"distance", num(d.distance)}});
      r.text += (i == 0 ? " " : "; ") + item.text;
      r.fallback = r.fallback || item.fallback;
      r.data["objects"].push_back({{"track_id", d.track_id},
                                   {"label", d.label},
                                   {"p_prime", d.p_prime},
                                   {"distance", d.distance},
                                   {"x", d.world_point.x()},
                                   {"y", d.world_point.y()}});
    }
    return r;
  }
  if (query.is<engine::CaptureImage>()) {
    sim::RenderOptions opt;
    opt.vocabulary = world.vocabulary;
    opt.seed = world.render_seed;
    const auto frame = sim::render_observation(world.simulator.state(), world.simulator.grid(), *world.synonyms, opt);
    const std::string ref =
        ctx.session_id + "/" + std::to_string(ctx.turn) + "/" + std::to_string(snapshot_index) + ".png";
    bool persisted = false;
    if (!ctx.snapshot_dir.empty()) {
      write_png(ctx.snapshot_dir / ref, frame.depth.width, frame.depth.height, render_snapshot(frame));
      persisted = true;
    }
    auto r = respond(ctx, "image_captured", {{"ref", ref}});
    r.snapshot = ref;
    r.data = {{"snapshot", ref}, {"persisted", persisted}, {"objects_in_view", frame.masks.size()}};
    return r;
  }
  fail(ErrorCode::PreconditionFailed, "not a query: " + engine::format_action(query));
}

// ---------------------------------------------------------------------------
// Execution

std::string_view to_string(ActionStatus status) {
  switch (status) {
  case ActionStatus::Success:
    return "Success";
  case ActionStatus::Failed:
    return "Failed";
  case ActionStatus::Skipped:
    return "Skipped";
  case ActionStatus::Aborted:
    return "Aborted";
  }
  return "?";
}

nlohmann::json to_json(const ExecutionTrace &trace) {
  nlohmann::json actions = nlohmann::json::array();
  for (const auto &a : trace.per_action) {
    actions.push_back({{"primitive", a.primitive},
                       {"started_at", a.started_at},
                       {"ended_at", a.ended_at},
                       {"status", to_string(a.status)},
                       {"detail", a.detail}});
  }
  nlohmann::json responses = nlohmann::json::array();
  for (const auto &r : trace.responses) {
    responses.push_back({{"text", r.text}, {"lang", r.language}, {"fallback", r.fallback}});
  }
  return {{"per_action", actions},
          {"s_n", trace.s_n},
          {"final_pose", {trace.final_pose.x, trace.final_pose.y, trace.final_pose.theta}},
          {"snapshots", trace.snapshots},
          {"responses", responses},
          {"aborted", trace.aborted},
          {"twists", trace.twist_count}};
}

namespace {

enum class RunResult { Completed, Collided, Blocked, Aborted, Interrupted };

struct Outcome {
  ActionStatus status = ActionStatus::Success;
  std::string detail;
};

class Runner {
public:
  Runner(World &world, ExecutionContext &ctx, ExecutionTrace &trace, double plan_start)
      : world_(world), sim_(world.simulator), ctx_(ctx), trace_(trace), plan_start_(plan_start) {}

  std::size_t index = 0;

  Outcome run(const ActionPrimitive &action, const std::function<bool()> &interrupt = {}) {
    return std::visit(Overloaded{
                          [&](const engine::MoveLinear &) { return run_motion(action, true, interrupt); },
                          [&](const engine::Rotate &) { return run_motion(action, false, interrupt); },
                          [&](const engine::PatternMove &) { return run_motion(action, false, interrupt); },
                          [&](const engine::Wait &) { return run_motion(action, false, interrupt); },
                          [&](const engine::NavigateToCoords &n) {
                            return navigate({n.x, n.y}, n.speed, std::nullopt, interrupt);
                          },
                          [&](const engine::NavigateToNamed &n) { return navigate_named(n, interrupt); },
                          [&](const engine::NavigateToObject &n) { return navigate_object(n, interrupt); },
                          [&](const engine::LimitSpeed &l) {
                            ctx_.speed_ceiling = std::min(ctx_.speed_ceiling, l.max_speed);
                            emit(respond(ctx_, "speed_limited", {{"v", format_for_language(ctx_.speed_ceiling,
                                                                                            ctx_.language)}}));
                            return Outcome{};
                          },
                          [&](const engine::Guarded &g) { return run_guarded(g); },
                          [&](const auto &) {
                            emit(handle_query(action, world_, ctx_, static_cast<int>(trace_.snapshots.size())));
                            return Outcome{};
                          },
                      },
                      action.kind);
  }

private:
  MotionLimits limits() const {
    MotionLimits l;
    l.max_linear = ctx_.speed_ceiling;
    return l;
  }

  void mark_output() {
    if (!trace_.first_output_at) {
      trace_.first_output_at = sim_.time();
    }
  }

  void emit(QueryResponse r) {
    mark_output();
    if (r.snapshot) {
      trace_.snapshots.push_back(*r.snapshot);
    }
    if (ctx_.observer != nullptr) {
      ctx_.observer->on_response(r);
    }
    trace_.responses.push_back(std::move(r));
  }

  bool abort_requested() const { return ctx_.abort != nullptr && ctx_.abort->load(); }

  void tick(double v, double w, double h) {
    sim_.advance(v, w, h);
    if (ctx_.observer != nullptr) {
      ctx_.observer->on_tick(sim_.state(), index, sim_.time());
    }
  }

  RunResult run_twists(const std::vector<sim::TwistCommand> &twists, bool obstacle_guard,
                       const std::function<bool()> &interrupt) {
    const double dt = sim_.dt();
    for (const auto &t : twists) {
      mark_output();
      ++trace_.twist_count;
      if (ctx_.observer != nullptr) {
        ctx_.observer->on_twist(t, sim_.time());
      }
      const auto full = static_cast<long long>(std::floor(t.duration / dt));
      const double rest = t.duration - static_cast<double>(full) * dt;
      const long long steps = full + (rest > 1e-12 ? 1 : 0);
      double paused = 0.0;
      for (long long k = 0; k < steps;) {
        if (abort_requested()) {
          return RunResult::Aborted;
        }
        if (interrupt && interrupt()) {
          return RunResult::Interrupted;
        }
        if (obstacle_guard && t.v != 0.0 && sim_.range(t.v < 0) < ctx_.obstacle_pause_range) {
          tick(0.0, 0.0, dt);
          paused += dt;
          if (paused > ctx_.max_pause) {
            return RunResult::Blocked;
          }
          continue;
        }
        paused = 0.0;
        tick(t.v, t.omega, k < full ? dt : rest);
        ++k;
        if (sim_.state().collided) {
          return RunResult::Collided;
        }
      }
    }
    return RunResult::Completed;
  }

  static Outcome from(RunResult r) {
    switch (r) {
    case RunResult::Collided:
      return {ActionStatus::Failed, "collision"};
    case RunResult::Blocked:
      return {ActionStatus::Failed, "path blocked by an obstacle"};
    case RunResult::Aborted:
      return {ActionStatus::Aborted, "abort requested"};
    case RunResult::Interrupted:
      return {ActionStatus::Success, "interrupted by guard condition"};
    case RunResult::Completed:
      break;
    }
    return {};
  }

  Outcome run_motion(const ActionPrimitive &action, bool obstacle_guard, const std::function<bool()> &interrupt) {
    const auto twists = compile(action, limits());
    const sim::Pose2 start = sim_.state().pose;
    const sim::Pose2 expected = nominal_end_pose(start, twists);
    const RunResult r = run_twists(twists, obstacle_guard, interrupt);
    if (r != RunResult::Completed) {
      return from(r);
    }
    const auto &end = sim_.state().pose;
    const double pos_err = std::hypot(end.x - expected.x, end.y - expected.y);
    const double yaw_err = std::abs(sim::normalize_angle(end.theta - expected.theta));
    if (pos_err > ctx_.goal_tolerance || yaw_err > kHeadingTolerance) {
      return {ActionStatus::Failed, "ended " + format_number(pos_err) + " m from the expected pose"};
    }
    return {ActionStatus::Success, "residual " + format_number(pos_err) + " m"};
  }

  Outcome navigate(const Eigen::Vector2d &goal, double speed, std::optional<double> heading,
                   const std::function<bool()> &interrupt) {
    const auto &pose = sim_.state().pose;
    std::vector<Eigen::Vector2d> path;
    try {
      path = sim::plan_path(sim_.planning_grid(), {pose.x, pose.y}, goal);
    } catch (const Error &e) {
      return {ActionStatus::Failed, std::string(to_string(e.code())) + ": " + e.what()};
    }
    const auto twists = compile_path(pose, path, speed, limits(), heading);
    const RunResult r = run_twists(twists, false, interrupt);
    if (r != RunResult::Completed) {
      return from(r);
    }
    const GoalSpec spec{goal, ctx_.goal_tolerance};
    const auto &end = sim_.state().pose;
    const double err = std::hypot(end.x - goal.x(), end.y - goal.y());
    if (!goal_reached(end, spec)) {
      return {ActionStatus::Failed, "stopped " + format_number(err) + " m from the goal"};
    }
    return {ActionStatus::Success, "residual " + format_number(err) + " m"};
  }

  Outcome navigate_named(const engine::NavigateToNamed &n, const std::function<bool()> &interrupt) {
    const auto &grid = sim_.grid();
    const auto it = grid.destinations.find(n.destination);
    if (it == grid.destinations.end()) {
      return {ActionStatus::Failed, "unknown destination: " + n.destination};
    }
    std::optional<double> heading;
    if (const auto yaw = grid.destination_yaw_deg.find(n.destination); yaw != grid.destination_yaw_deg.end()) {
      heading = yaw->second * kDeg;
    }
    return navigate(it->second.head<2>(), n.speed, heading, interrupt);
  }

  Outcome navigate_object(const engine::NavigateToObject &n, const std::function<bool()> &interrupt) {
    const auto detections = observe(world_);
    if (detections.empty()) {
      return {ActionStatus::Failed, "UnreachableObject: nothing detected"};
    }
    std::vector<perception::TargetCandidate> candidates;
    for (const auto &d : detections) {
      candidates.push_back({d.track_id, d.labels, d.p_primes});
    }
    perception::TargetChoice choice;
    if (n.selector == engine::ObjectSelector::BestConfidence) {
      const auto best = std::max_element(detections.begin(), detections.end(), [](const auto &a, const auto &b) {
        return a.p_prime < b.p_prime || (a.p_prime == b.p_prime && a.track_id > b.track_id);
      });
      choice.track_id = best->track_id;
    } else {
      const std::string command = n.label + " " + ctx_.instruction;
      const auto *syn = world_.synonyms;
      const std::string lang = ctx_.language;
      choice = perception::select_target(candidates, command, world_.perception_config,
                                         [syn, lang](const std::string &label, std::string_view text) {
                                           return perception::lexical_similarity(label, text, syn, lang);
                                         });
      const auto &picked = candidates[choice.candidate].labels[choice.label];
      if (perception::lexical_similarity(picked, n.label, world_.synonyms, "en") <= 0.0) {
        return {ActionStatus::Failed, "UnreachableObject: no " + n.label + " in view"};
      }
    }
    const auto *track = world_.tracks.find(choice.track_id);
    if (track == nullptr) {
      return {ActionStatus::Failed, "UnreachableObject: track lost"};
    }
    const Eigen::Vector2d obj = track->position().head<2>();
    const auto &pose = sim_.state().pose;
    const Eigen::Vector2d robot(pose.x, pose.y);
    const Eigen::Vector2d toward = robot - obj;
    const double base = toward.norm() > 1e-9 ? std::atan2(toward.y(), toward.x()) : 0.0;
    // approach from the robot's side first, then fan out around the object
    for (double standoff : {kObjectStandoff, 1.0, 1.2, 1.5}) {
      for (int k = 0; k < 16; ++k) {
        const double offset = (k % 2 == 0 ? 1 : -1) * ((k + 1) / 2) * kPi / 8;
        const Eigen::Vector2d goal = obj + standoff * Eigen::Vector2d(std::cos(base + offset), std::sin(base + offset));
        if (sim_.planning_grid().occupied_at(goal.x(), goal.y())) {
          continue;
        }
        const Eigen::Vector2d look = obj - goal;
        auto out = navigate(goal, n.speed, std::atan2(look.y(), look.x()), interrupt);
        if (out.status == ActionStatus::Failed && out.detail.find("NoPath") != std::string::npos) {
          continue;
        }
        out.detail = "track " + std::to_string(choice.track_id) + " (" + track->label + "), " + out.detail;
        return out;
      }
    }
    return {ActionStatus::Failed, "UnreachableObject: no free approach to " + track->label};
  }

  bool holds(const engine::Condition &condition) {
    return std::visit(Overloaded{
                          [&](const engine::DetectionAbove &c) {
                            for (const auto &d : observe(world_)) {
                              for (std::size_t j = 0; j < d.labels.size(); ++j) {
                                const bool match =
                                    !c.label || d.labels[j] == *c.label ||
                                    perception::lexical_similarity(d.labels[j], *c.label, world_.synonyms, "en") >=
                                        1.0;
                                if (match && d.p_primes[j] >= c.probability) {
                                  return true;
                                }
                              }
                            }
                            return false;
                          },
                          [&](const engine::ObstacleCloser &c) {
                            return sim_.range(false, std::max(5.0, 2 * c.distance)) < c.distance;
                          },
                          [&](const engine::ElapsedOver &c) { return sim_.time() - plan_start_ > c.seconds; },
                          [&](const engine::TravelTimeOver &c) {
                            const auto &p = sim_.state().pose;
                            return sim::travel_time(p.x, p.y, c.x, c.y, c.speed) > c.seconds;
                          },
                      },
                      condition);
  }

  Outcome run_guarded(const engine::Guarded &g) {
    if (holds(g.condition)) {
      auto out = run(*g.then);
      out.detail = "condition met; " + out.detail;
      return out;
    }
    if (!g.otherwise) {
      return {ActionStatus::Success, "condition not met"};
    }
    bool flipped = false;
    auto out = run(**g.otherwise, [&] { return flipped = holds(g.condition); });
    if (flipped) {
      auto then = run(*g.then);
      then.detail = "condition met during fallback; " + then.detail;
      return then;
    }
    out.detail = "condition not met; " + out.detail;
    return out;
  }

  World &world_;
  sim::Simulator &sim_;
  ExecutionContext &ctx_;
  ExecutionTrace &trace_;
  double plan_start_;
};

} // namespace

ExecutionTrace execute_plan(const engine::ActionPlan &plan, Approval approval, World &world, ExecutionContext &ctx) {
  if (plan.requires_confirmation && approval == Approval::Pending) {
    fail(ErrorCode::NotApproved, "plan needs confirmation before it can run");
  }
  ExecutionTrace trace;
  const double t0 = world.simulator.time();
  const auto skip_all = [&](const std::string &why) {
    for (const auto &a : plan.actions) {
      trace.per_action.push_back({engine::format_action(a), t0, t0, ActionStatus::Skipped, why});
    }
  };
  if (approval == Approval::Rejected) {
    skip_all("plan rejected");
    trace.s_n = 1;
    trace.final_pose = world.simulator.state().pose;
    return trace;
  }
  if (plan.parse_failed()) {
    skip_all("plan has unrecognized actions");
    trace.s_n = 0;
    trace.final_pose = world.simulator.state().pose;
    return trace;
  }
  Runner runner(world, ctx, trace, t0);
  bool stop = false;
  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    ActionRecord rec;
    rec.primitive = engine::format_action(plan.actions[i]);
    rec.started_at = world.simulator.time();
    if (stop) {
      rec.status = ActionStatus::Skipped;
      rec.detail = trace.aborted ? "aborted earlier" : "earlier action failed";
    } else if (ctx.abort != nullptr && ctx.abort->load()) {
      rec.status = ActionStatus::Aborted;
      rec.detail = "abort requested";
    } else {
      runner.index = i;
      const auto out = runner.run(plan.actions[i]);
      rec.status = out.status;
      rec.detail = out.detail;
    }
    rec.ended_at = world.simulator.time();
    if (rec.status == ActionStatus::Aborted) {
      trace.aborted = true;
    }
    stop = stop || rec.status == ActionStatus::Failed || rec.status == ActionStatus::Aborted;
    if (ctx.observer != nullptr) {
      ctx.observer->on_action_end(i, rec);
    }
    trace.per_action.push_back(std::move(rec));
  }
  trace.s_n = std::all_of(trace.per_action.begin(), trace.per_action.end(),
                          [](const ActionRecord &r) {
                            return r.status == ActionStatus::Skipped || r.status == ActionStatus::Success;
                          })
                  ? 1
                  : 0;
  trace.final_pose = world.simulator.state().pose;
  return trace;
}

} // namespace babelbot::exec
