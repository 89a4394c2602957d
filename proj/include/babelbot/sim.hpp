#pragma once

#include "babelbot/perception.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace babelbot::sim {

inline constexpr double kDefaultDt = 0.05;
inline constexpr double kRobotRadius = 0.3;
inline constexpr double kCameraHeight = 0.3;

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0; // radians, (-pi, pi]
};

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

struct SceneObject {
  std::string label;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double radius = 0.3;
  double illumination = 1.0;
  double occluded_fraction = 0.0;
};

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell &, const Cell &) = default;
};

/// Row 0 of the map file is the top (largest y); cell (0, 0) is the
/// bottom-left cell and `origin` is its lower-left corner in world metres.
class OccupancyGrid {
public:
  OccupancyGrid() = default;
  OccupancyGrid(int width, int height, double resolution, Eigen::Vector2d origin = Eigen::Vector2d::Zero());

  static OccupancyGrid from_json(const nlohmann::json &j);
  /// Throws IoError / InvalidFormat.
  static OccupancyGrid load(const std::filesystem::path &file);
  [[nodiscard]] nlohmann::json to_json() const;

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] double resolution() const { return resolution_; }
  [[nodiscard]] const Eigen::Vector2d &origin() const { return origin_; }

  [[nodiscard]] bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  /// Out-of-map cells count as occupied.
  [[nodiscard]] bool occupied(Cell c) const;
  void set_occupied(Cell c, bool value);
  [[nodiscard]] bool occupied_at(double x, double y) const { return occupied(world_to_cell(x, y)); }

  [[nodiscard]] Cell world_to_cell(double x, double y) const;
  [[nodiscard]] Eigen::Vector2d cell_center(Cell c) const;

  /// Marks every cell whose centre lies within `radius` of an occupied cell centre.
  [[nodiscard]] OccupancyGrid inflated(double radius) const;

  std::map<std::string, Eigen::Vector3d> destinations;
  std::map<std::string, double> destination_yaw_deg;
  std::vector<SceneObject> objects;
  perception::CameraIntrinsics intrinsics;

private:
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 0.1;
  Eigen::Vector2d origin_ = Eigen::Vector2d::Zero();
  std::vector<std::uint8_t> cells_;
};

double distance_between(double ax, double ay, double bx, double by);
/// Straight-line travel time; throws InvalidFormat for non-positive speed.
double travel_time(double ax, double ay, double bx, double by, double speed);

// ---------------------------------------------------------------------------
// Kinematics

struct TwistCommand {
  double v = 0.0;     // m/s
  double omega = 0.0; // rad/s
  double duration = 0.0;
};

struct RobotState {
  Pose2 pose;
  double v = 0.0;
  double omega = 0.0;
  double odom_distance = 0.0;
  bool collided = false;
};

/// Exact unicycle arc over dt. With a collision grid, the swept arc is
/// sampled and the state is frozen (collided = true) on contact.
RobotState step(const RobotState &state, double v, double omega, double dt,
                const OccupancyGrid *collision_grid = nullptr);

// ---------------------------------------------------------------------------
// Planning

struct CellPath {
  std::vector<Cell> cells;
  long long straight_moves = 0;
  long long diagonal_moves = 0;
  [[nodiscard]] double cost() const;
};

/// 8-connected A* without corner cutting, octile heuristic. Throws NoPath.
CellPath astar(const OccupancyGrid &grid, Cell start, Cell goal);

/// Cells on the segment are all free (sampled at a quarter cell).
bool line_of_sight(const OccupancyGrid &grid, const Eigen::Vector2d &a, const Eigen::Vector2d &b);

/// A* on the inflated grid followed by line-of-sight smoothing. The first
/// waypoint is `start`, the last is `goal`. Throws NoPath.
std::vector<Eigen::Vector2d> plan_path(const OccupancyGrid &inflated, const Eigen::Vector2d &start,
                                       const Eigen::Vector2d &goal);

// ---------------------------------------------------------------------------
// World

class Simulator {
public:
  explicit Simulator(OccupancyGrid grid, double robot_radius = kRobotRadius, double dt = kDefaultDt);

  [[nodiscard]] const RobotState &state() const { return state_; }
  [[nodiscard]] double time() const { return time_; }
  [[nodiscard]] double dt() const { return dt_; }
  [[nodiscard]] double robot_radius() const { return robot_radius_; }
  [[nodiscard]] const OccupancyGrid &grid() const { return grid_; }
  [[nodiscard]] const OccupancyGrid &inflated() const { return inflated_; }
  /// Wider inflation plus object discs, used for planning so smoothed paths keep clear of contact.
  [[nodiscard]] const OccupancyGrid &planning_grid() const { return planning_; }

  void reset(const Pose2 &pose);
  /// Advances by `dt` (default: the configured step).
  const RobotState &advance(double v, double omega, double dt = -1.0);
  /// Distance along the heading (or behind when `backward`) to the first
  /// inflated obstacle or object, capped at `max_range`.
  [[nodiscard]] double range(bool backward, double max_range = 5.0) const;

private:
  OccupancyGrid grid_;
  OccupancyGrid inflated_;
  OccupancyGrid planning_;
  double robot_radius_;
  double dt_;
  RobotState state_;
  double time_ = 0.0;
};

// ---------------------------------------------------------------------------
// Synthetic observations

struct RenderOptions {
  std::vector<std::string> vocabulary;
  std::uint64_t seed = 1;
  double noise = 0.05;
  double camera_height = kCameraHeight;
};

/// Degradation of a region: -ln(illumination * (1 - occlusion)) clamped to [0, 5].
double region_degradation(double illumination, double occluded_fraction);
double source_confidence(double illumination, double occluded_fraction);

/// One disc mask per visible object (in the horizontal field of view, in
/// front, not behind a wall), nearest object wins each pixel.
perception::PerceptionFrame render_observation(const RobotState &state, const OccupancyGrid &world,
                                               const perception::SynonymTable &synonyms,
                                               const RenderOptions &options);

/// Monocular stand-in: true depth times 1 +- 0.1 seeded noise.
class SyntheticMonocularDepth final : public perception::MonocularDepthSource {
public:
  SyntheticMonocularDepth(perception::DepthImage truth, std::uint64_t seed) : truth_(std::move(truth)), seed_(seed) {}
  [[nodiscard]] std::vector<double> predict(const std::vector<perception::Pixel> &pixels) const override;

private:
  perception::DepthImage truth_;
  std::uint64_t seed_;
};

/// Camera-to-world point for a robot pose and the default mount.
Eigen::Vector3d camera_to_world(const Eigen::Vector3d &point_cam, const Pose2 &pose,
                                double camera_height = kCameraHeight);

} // namespace babelbot::sim
