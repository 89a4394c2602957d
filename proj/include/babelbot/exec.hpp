#pragma once

#include "babelbot/actions.hpp"
#include "babelbot/perception.hpp"
#include "babelbot/sim.hpp"

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace babelbot::exec {

inline constexpr double kGoalTolerance = 0.2;       // m
inline constexpr double kHeadingTolerance = 0.035;  // rad, about 2 deg
inline constexpr double kObstaclePauseRange = 0.5;  // m
inline constexpr double kObjectStandoff = 0.8;      // m, stop short of a target object

struct GoalSpec {
  Eigen::Vector2d target = Eigen::Vector2d::Zero();
  double tolerance = kGoalTolerance;
};

/// Planar distance to the target within tolerance. Throws PreconditionFailed for tolerance <= 0.
bool goal_reached(const sim::Pose2 &pose, const GoalSpec &goal);

// ---------------------------------------------------------------------------
// Responses

/// Per-language message catalogue loaded from data/responses/<code>.json.
class ResponseCatalog {
public:
  static ResponseCatalog load_directory(const std::filesystem::path &dir);
  void add(const std::string &language, nlohmann::json templates);

  struct Rendered {
    std::string text;
    std::string language; // language actually used
    bool fallback = false;  // true when English stood in for the requested language
  };

  /// Substitutes {name} placeholders. Missing language or key falls back to English.
  [[nodiscard]] Rendered render(const std::string &key, const std::string &language,
                                const std::map<std::string, std::string> &values = {}) const;
  /// Localized word for a compass direction or object label ("compass" / "labels" tables).
  [[nodiscard]] std::string word(const std::string &table, const std::string &key, const std::string &language) const;
  [[nodiscard]] bool has_language(const std::string &language) const { return catalog_.count(language) > 0; }

private:
  [[nodiscard]] const nlohmann::json *lookup(const std::string &language, const std::string &key) const;
  std::map<std::string, nlohmann::json> catalog_;
};

/// Number for user-facing text: two decimals at most, decimal comma where customary.
std::string format_for_language(double value, const std::string &language);

// ---------------------------------------------------------------------------
// Compilation

struct MotionLimits {
  double max_linear = engine::kMaxLinearSpeed; // session ceiling, m/s
  double max_angular = engine::kMaxAngularSpeedDeg * std::numbers::pi / 180.0;
  // rad/s used for the turns inside patterns and navigation
  double turn_rate = engine::kDefaultAngularSpeedDeg * std::numbers::pi / 180.0;
};

/// Twist schedule for a motion primitive that needs no planning (MoveLinear,
/// Rotate, PatternMove, Wait). Other primitives compile to an empty schedule.
std::vector<sim::TwistCommand> compile(const engine::ActionPrimitive &action, const MotionLimits &limits = {});

/// Rotate-then-drive twists along `waypoints` starting at `start`; the first
/// waypoint is taken to be the start position. Optional final heading.
std::vector<sim::TwistCommand> compile_path(const sim::Pose2 &start, const std::vector<Eigen::Vector2d> &waypoints,
                                            double speed, const MotionLimits &limits,
                                            std::optional<double> final_heading = std::nullopt);

/// Pose reached by integrating `twists` from `start` with no obstacles.
sim::Pose2 nominal_end_pose(const sim::Pose2 &start, const std::vector<sim::TwistCommand> &twists);

// ---------------------------------------------------------------------------
// World wiring

/// What the executor can see and drive: simulator plus the perception stack.
struct World {
  explicit World(sim::OccupancyGrid grid, const perception::SynonymTable &synonyms);

  sim::Simulator simulator;
  const perception::SynonymTable *synonyms;
  perception::PerceptionConfig perception_config;
  perception::RigidTransform camera_mount = perception::default_camera_mount(sim::kCameraHeight);
  perception::TrackRegistry tracks;
  std::uint64_t render_seed = 1;
  std::vector<std::string> vocabulary;
};

struct Detection {
  int track_id = 0;
  std::string label;
  double p_prime = 0.0;
  double distance = 0.0; // from the robot, metres
  Eigen::Vector3d world_point = Eigen::Vector3d::Zero();
  std::vector<std::string> labels;
  std::vector<double> p_primes;
};

/// Renders the current view, runs the perception pipeline and feeds the tracks.
std::vector<Detection> observe(World &world);

// ---------------------------------------------------------------------------
// Execution

enum class ActionStatus { Success, Failed, Skipped, Aborted };
std::string_view to_string(ActionStatus status);

struct ActionRecord {
  std::string primitive; // canonical English form
  double started_at = 0.0;
  double ended_at = 0.0;
  ActionStatus status = ActionStatus::Skipped;
  std::string detail;
};

struct QueryResponse {
  std::string text;
  std::string language;
  bool fallback = false;
  std::optional<std::string> snapshot; // relative reference for CaptureImage
  nlohmann::json data;                 // structured payload
};

struct ExecutionTrace {
  std::vector<ActionRecord> per_action;
  int s_n = 1;
  sim::Pose2 final_pose;
  std::vector<std::string> snapshots;
  std::vector<QueryResponse> responses;
  /// Simulation time of the first emitted twist or response, if any.
  std::optional<double> first_output_at;
  bool aborted = false;
  std::size_t twist_count = 0;
};

nlohmann::json to_json(const ExecutionTrace &trace);

enum class Approval { Pending, Approved, Rejected };

/// Hooks called on the executing thread. `on_tick` fires once per simulation step.
class ExecutionObserver {
public:
  virtual ~ExecutionObserver() = default;
  virtual void on_twist(const sim::TwistCommand & /*twist*/, double /*time*/) {}
  virtual void on_tick(const sim::RobotState & /*state*/, std::size_t /*action_index*/, double /*time*/) {}
  virtual void on_action_end(std::size_t /*action_index*/, const ActionRecord & /*record*/) {}
  virtual void on_response(const QueryResponse & /*response*/) {}
};

struct ExecutionContext {
  std::string session_id = "session";
  int turn = 0;
  std::string language = "en";
  /// Instruction text, used to ground named objects.
  std::string instruction;
  const ResponseCatalog *responses = nullptr;
  /// Snapshot root; empty keeps snapshots in memory only.
  std::filesystem::path snapshot_dir;
  /// Session speed ceiling; LimitSpeed lowers it for the rest of the session.
  double speed_ceiling = engine::kMaxLinearSpeed;
  double obstacle_pause_range = kObstaclePauseRange;
  double max_pause = 10.0; // s blocked before a move fails
  double goal_tolerance = kGoalTolerance;
  const std::atomic<bool> *abort = nullptr;
  ExecutionObserver *observer = nullptr;
};

/// Answers ReportPose, DescribeSurroundings and CaptureImage.
QueryResponse handle_query(const engine::ActionPrimitive &query, World &world, ExecutionContext &ctx,
                           int snapshot_index = 0);

/// Runs an approved (or confirmation-free) plan. A rejected plan yields a
/// trace whose actions are all Skipped and emits nothing. Throws NotApproved
/// for a pending plan that requires confirmation. An abort request ends the
/// current action as Aborted and skips the rest.
ExecutionTrace execute_plan(const engine::ActionPlan &plan, Approval approval, World &world, ExecutionContext &ctx);

/// Writes an RGB PNG; throws IoError.
void write_png(const std::filesystem::path &file, int width, int height, const std::vector<std::uint8_t> &rgb);
/// False-colour image of a frame: depth shading with one hue per mask.
std::vector<std::uint8_t> render_snapshot(const perception::PerceptionFrame &frame);

} // namespace babelbot::exec
