#include "babelbot/sim.hpp"

#include "babelbot/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <queue>
#include <random>

namespace babelbot::sim {

using nlohmann::json;

double normalize_angle(double a) {
  a = std::fmod(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) {
    a += 2.0 * std::numbers::pi;
  } else if (a > std::numbers::pi) {
    a -= 2.0 * std::numbers::pi;
  }
  return a;
}

// ---------------------------------------------------------------------------
// Grid

OccupancyGrid::OccupancyGrid(int width, int height, double resolution, Eigen::Vector2d origin)
    : width_(width), height_(height), resolution_(resolution), origin_(std::move(origin)),
      cells_(static_cast<std::size_t>(width) * height, 0) {
  if (width <= 0 || height <= 0 || !(resolution > 0)) {
    fail(ErrorCode::InvalidFormat, "grid needs positive size and resolution");
  }
}

bool OccupancyGrid::occupied(Cell c) const {
  return !in_bounds(c) || cells_[static_cast<std::size_t>(c.y) * width_ + c.x] != 0;
}

void OccupancyGrid::set_occupied(Cell c, bool value) {
  if (in_bounds(c)) {
    cells_[static_cast<std::size_t>(c.y) * width_ + c.x] = value ? 1 : 0;
  }
}

Cell OccupancyGrid::world_to_cell(double x, double y) const {
  return {static_cast<int>(std::floor((x - origin_.x()) / resolution_)),
          static_cast<int>(std::floor((y - origin_.y()) / resolution_))};
}

Eigen::Vector2d OccupancyGrid::cell_center(Cell c) const {
  return origin_ + Eigen::Vector2d((c.x + 0.5) * resolution_, (c.y + 0.5) * resolution_);
}

OccupancyGrid OccupancyGrid::inflated(double radius) const {
  OccupancyGrid out = *this;
  const int k = static_cast<int>(std::ceil(radius / resolution_));
  const double r2 = (radius / resolution_) * (radius / resolution_) + 1e-9;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (cells_[static_cast<std::size_t>(y) * width_ + x] == 0) {
        continue;
      }
      for (int dy = -k; dy <= k; ++dy) {
        for (int dx = -k; dx <= k; ++dx) {
          if (dx * dx + dy * dy <= r2) {
            out.set_occupied({x + dx, y + dy}, true);
          }
        }
      }
    }
  }
  return out;
}

OccupancyGrid OccupancyGrid::from_json(const json &j) {
  try {
    const auto rows = j.at("rows").get<std::vector<std::string>>();
    if (rows.empty() || rows[0].empty()) {
      fail(ErrorCode::InvalidFormat, "map has no rows");
    }
    Eigen::Vector2d origin = Eigen::Vector2d::Zero();
    if (j.contains("origin")) {
      const auto o = j.at("origin").get<std::vector<double>>();
      if (o.size() != 2) {
        fail(ErrorCode::InvalidFormat, "origin must be [x, y]");
      }
      origin = {o[0], o[1]};
    }
    const int h = static_cast<int>(rows.size());
    const int w = static_cast<int>(rows[0].size());
    OccupancyGrid g(w, h, j.at("resolution").get<double>(), origin);
    for (int r = 0; r < h; ++r) {
      if (static_cast<int>(rows[static_cast<std::size_t>(r)].size()) != w) {
        fail(ErrorCode::InvalidFormat, "map rows differ in length");
      }
      for (int x = 0; x < w; ++x) {
        const char c = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(x)];
        if (c != '#' && c != '.') {
          fail(ErrorCode::InvalidFormat, std::string("unknown map cell '") + c + "'");
        }
        g.set_occupied({x, h - 1 - r}, c == '#');
      }
    }
    if (j.contains("destinations")) {
      for (const auto &[name, v] : j.at("destinations").items()) {
        const auto p = v.get<std::vector<double>>();
        if (p.size() < 2) {
          fail(ErrorCode::InvalidFormat, "destination " + name + " needs x and y");
        }
        if (g.occupied_at(p[0], p[1])) {
          fail(ErrorCode::InvalidFormat, "destination " + name + " is not in free space");
        }
        g.destinations[name] = {p[0], p[1], p.size() > 2 ? p[2] : 0.0};
      }
    }
    if (j.contains("destination_yaw_deg")) {
      for (const auto &[name, v] : j.at("destination_yaw_deg").items()) {
        g.destination_yaw_deg[name] = v.get<double>();
      }
    }
    if (j.contains("objects")) {
      for (const auto &o : j.at("objects")) {
        SceneObject s;
        s.label = o.at("label").get<std::string>();
        s.x = o.at("x").get<double>();
        s.y = o.at("y").get<double>();
        s.z = o.value("z", 0.0);
        s.radius = o.value("radius", 0.3);
        s.illumination = o.value("illumination", 1.0);
        s.occluded_fraction = o.value("occluded_fraction", 0.0);
        if (!(s.radius > 0)) {
          fail(ErrorCode::InvalidFormat, "object radius must be positive");
        }
        g.objects.push_back(std::move(s));
      }
    }
    if (j.contains("intrinsics")) {
      g.intrinsics = perception::CameraIntrinsics::from_json(j.at("intrinsics"));
    }
    return g;
  } catch (const json::exception &e) {
    fail(ErrorCode::InvalidFormat, std::string("bad map: ") + e.what());
  }
}

OccupancyGrid OccupancyGrid::load(const std::filesystem::path &file) {
  std::ifstream in(file);
  if (!in) {
    fail(ErrorCode::IoError, "cannot open map " + file.string());
  }
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    fail(ErrorCode::InvalidFormat, "map is not JSON: " + file.string());
  }
  return from_json(j);
}

json OccupancyGrid::to_json() const {
  json rows = json::array();
  for (int r = 0; r < height_; ++r) {
    std::string row;
    for (int x = 0; x < width_; ++x) {
      row.push_back(occupied({x, height_ - 1 - r}) ? '#' : '.');
    }
    rows.push_back(row);
  }
  json dest = json::object();
  for (const auto &[name, p] : destinations) {
    dest[name] = {p.x(), p.y(), p.z()};
  }
  json objs = json::array();
  for (const auto &o : objects) {
    objs.push_back({{"label", o.label}, {"x", o.x}, {"y", o.y}, {"z", o.z}, {"radius", o.radius},
                    {"illumination", o.illumination}, {"occluded_fraction", o.occluded_fraction}});
  }
  return {{"resolution", resolution_}, {"origin", {origin_.x(), origin_.y()}}, {"rows", rows},
          {"destinations", dest},      {"destination_yaw_deg", destination_yaw_deg},
          {"objects", objs},           {"intrinsics", intrinsics.to_json()}};
}

double distance_between(double ax, double ay, double bx, double by) { return std::hypot(bx - ax, by - ay); }

double travel_time(double ax, double ay, double bx, double by, double speed) {
  if (!(speed > 0)) {
    fail(ErrorCode::InvalidFormat, "travel time needs a positive speed");
  }
  return distance_between(ax, ay, bx, by) / speed;
}

// ---------------------------------------------------------------------------
// Kinematics

namespace {

Pose2 arc(const Pose2 &p, double v, double omega, double t) {
  Pose2 out;
  if (std::abs(omega) < 1e-9) {
    out.x = p.x + v * t * std::cos(p.theta);
    out.y = p.y + v * t * std::sin(p.theta);
    out.theta = p.theta;
  } else {
    const double r = v / omega;
    const double th = p.theta + omega * t;
    out.x = p.x + r * (std::sin(th) - std::sin(p.theta));
    out.y = p.y - r * (std::cos(th) - std::cos(p.theta));
    out.theta = th;
  }
  out.theta = normalize_angle(out.theta);
  return out;
}

} // namespace

RobotState step(const RobotState &state, double v, double omega, double dt, const OccupancyGrid *collision_grid) {
  if (!(dt > 0)) {
    fail(ErrorCode::InvalidFormat, "dt must be positive");
  }
  RobotState out = state;
  out.v = v;
  out.omega = omega;
  const Pose2 next = arc(state.pose, v, omega, dt);
  if (collision_grid != nullptr) {
    const double spacing = collision_grid->resolution() / 4.0;
    const int samples = std::max(1, static_cast<int>(std::ceil(std::abs(v) * dt / spacing)));
    for (int i = 1; i <= samples; ++i) {
      const Pose2 p = i == samples ? next : arc(state.pose, v, omega, dt * i / samples);
      if (collision_grid->occupied_at(p.x, p.y)) {
        out.v = 0.0;
        out.omega = 0.0;
        out.collided = true;
        return out;
      }
    }
  }
  out.pose = next;
  out.odom_distance += std::abs(v) * dt;
  return out;
}

// ---------------------------------------------------------------------------
// Planning

double CellPath::cost() const {
  return static_cast<double>(straight_moves) + static_cast<double>(diagonal_moves) * std::numbers::sqrt2;
}

CellPath astar(const OccupancyGrid &grid, Cell start, Cell goal) {
  if (!grid.in_bounds(start) || grid.occupied(goal)) {
    fail(ErrorCode::NoPath, "start outside the map or goal not in free space");
  }
  const int w = grid.width();
  const auto idx = [w](Cell c) { return static_cast<std::size_t>(c.y) * w + c.x; };
  const std::size_t n = static_cast<std::size_t>(w) * grid.height();
  struct Counts {
    long long a = 0, b = 0;
    [[nodiscard]] double value() const { return static_cast<double>(a) + static_cast<double>(b) * std::numbers::sqrt2; }
  };
  std::vector<Counts> g(n);
  std::vector<char> seen(n, 0), closed(n, 0);
  std::vector<std::size_t> parent(n, n);
  const auto h = [&](Cell c) {
    const double dx = std::abs(c.x - goal.x), dy = std::abs(c.y - goal.y);
    return std::max(dx, dy) - std::min(dx, dy) + std::numbers::sqrt2 * std::min(dx, dy);
  };
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  seen[idx(start)] = 1;
  open.push({h(start), idx(start)});
  static constexpr int kDx[] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int kDy[] = {0, 0, 1, -1, 1, -1, 1, -1};
  while (!open.empty()) {
    const std::size_t cur = open.top().second;
    open.pop();
    if (closed[cur]) {
      continue;
    }
    closed[cur] = 1;
    const Cell c{static_cast<int>(cur % w), static_cast<int>(cur / w)};
    if (c == goal) {
      CellPath path;
      path.straight_moves = g[cur].a;
      path.diagonal_moves = g[cur].b;
      for (std::size_t i = cur; i != n; i = parent[i]) {
        path.cells.push_back({static_cast<int>(i % w), static_cast<int>(i / w)});
      }
      std::reverse(path.cells.begin(), path.cells.end());
      return path;
    }
    for (int k = 0; k < 8; ++k) {
      const Cell nb{c.x + kDx[k], c.y + kDy[k]};
      if (grid.occupied(nb)) {
        continue;
      }
      const bool diagonal = k >= 4;
      if (diagonal && (grid.occupied({c.x + kDx[k], c.y}) || grid.occupied({c.x, c.y + kDy[k]}))) {
        continue; // no corner cutting
      }
      const std::size_t ni = idx(nb);
      if (closed[ni]) {
        continue;
      }
      Counts cand = g[cur];
      (diagonal ? cand.b : cand.a) += 1;
      if (!seen[ni] || cand.value() < g[ni].value()) {
        seen[ni] = 1;
        g[ni] = cand;
        parent[ni] = cur;
        open.push({cand.value() + h(nb), ni});
      }
    }
  }
  fail(ErrorCode::NoPath, "goal unreachable");
}

bool line_of_sight(const OccupancyGrid &grid, const Eigen::Vector2d &a, const Eigen::Vector2d &b) {
  const double len = (b - a).norm();
  const int samples = std::max(1, static_cast<int>(std::ceil(len / (grid.resolution() / 4.0))));
  for (int i = 0; i <= samples; ++i) {
    const Eigen::Vector2d p = a + (b - a) * (static_cast<double>(i) / samples);
    if (grid.occupied_at(p.x(), p.y())) {
      return false;
    }
  }
  return true;
}

std::vector<Eigen::Vector2d> plan_path(const OccupancyGrid &inflated, const Eigen::Vector2d &start,
                                       const Eigen::Vector2d &goal) {
  const Cell sc = inflated.world_to_cell(start.x(), start.y());
  const Cell gc = inflated.world_to_cell(goal.x(), goal.y());
  if (inflated.occupied_at(goal.x(), goal.y())) {
    fail(ErrorCode::NoPath, "goal is inside an (inflated) obstacle");
  }
  const CellPath cells = astar(inflated, sc, gc);
  std::vector<Eigen::Vector2d> raw{start};
  for (std::size_t i = 1; i + 1 < cells.cells.size(); ++i) {
    raw.push_back(inflated.cell_center(cells.cells[i]));
  }
  raw.push_back(goal);

  std::vector<Eigen::Vector2d> out{raw.front()};
  std::size_t i = 0;
  while (i + 1 < raw.size()) {
    std::size_t j = raw.size() - 1;
    while (j > i + 1 && !line_of_sight(inflated, raw[i], raw[j])) {
      --j;
    }
    out.push_back(raw[j]);
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulator

Simulator::Simulator(OccupancyGrid grid, double robot_radius, double dt)
    : grid_(std::move(grid)), robot_radius_(robot_radius), dt_(dt) {
  if (!(dt > 0) || !(robot_radius >= 0)) {
    fail(ErrorCode::InvalidFormat, "simulator needs dt > 0 and a non-negative robot radius");
  }
  inflated_ = grid_.inflated(robot_radius_);
  planning_ = grid_.inflated(robot_radius_ + grid_.resolution());
  // objects are not walls but the planner should still route around them
  for (const auto &obj : grid_.objects) {
    const double r = obj.radius + robot_radius_ + grid_.resolution();
    const Cell lo = planning_.world_to_cell(obj.x - r, obj.y - r);
    const Cell hi = planning_.world_to_cell(obj.x + r, obj.y + r);
    for (int y = lo.y; y <= hi.y; ++y) {
      for (int x = lo.x; x <= hi.x; ++x) {
        const Eigen::Vector2d c = planning_.cell_center({x, y});
        if (planning_.in_bounds({x, y}) && std::hypot(c.x() - obj.x, c.y() - obj.y) <= r) {
          planning_.set_occupied({x, y}, true);
        }
      }
    }
  }
}

void Simulator::reset(const Pose2 &pose) {
  state_ = RobotState{};
  state_.pose = pose;
  state_.pose.theta = normalize_angle(pose.theta);
}

const RobotState &Simulator::advance(double v, double omega, double dt) {
  const double h = dt > 0 ? dt : dt_;
  const bool was_collided = state_.collided;
  state_ = step(state_, v, omega, h, &inflated_);
  state_.collided = state_.collided || was_collided;
  time_ += h;
  return state_;
}

double Simulator::range(bool backward, double max_range) const {
  const double heading = state_.pose.theta + (backward ? std::numbers::pi : 0.0);
  const Eigen::Vector2d o(state_.pose.x, state_.pose.y);
  const Eigen::Vector2d d(std::cos(heading), std::sin(heading));
  double best = max_range;
  const double spacing = grid_.resolution() / 4.0;
  // skip the robot's own cell so a pose hugging an inflated edge still reads a range
  for (double s = spacing; s < best; s += spacing) {
    const Eigen::Vector2d p = o + s * d;
    if (inflated_.occupied_at(p.x(), p.y()) && !inflated_.occupied_at(o.x(), o.y())) {
      best = s;
      break;
    }
  }
  for (const auto &obj : grid_.objects) {
    const Eigen::Vector2d c(obj.x, obj.y);
    const double r = obj.radius + robot_radius_;
    const Eigen::Vector2d oc = o - c;
    const double b = oc.dot(d);
    const double disc = b * b - (oc.squaredNorm() - r * r);
    if (disc < 0) {
      continue;
    }
    const double t = -b - std::sqrt(disc);
    if (t >= 0 && t < best) {
      best = t;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Rendering

double region_degradation(double illumination, double occluded_fraction) {
  const double visible = std::clamp(illumination, 0.0, 1.0) * (1.0 - std::clamp(occluded_fraction, 0.0, 1.0));
  if (visible <= 0.0) {
    return 5.0;
  }
  return std::clamp(-std::log(visible), 0.0, 5.0);
}

double source_confidence(double illumination, double occluded_fraction) {
  return (1.0 - std::clamp(occluded_fraction, 0.0, 1.0)) * (0.5 + 0.5 * std::clamp(illumination, 0.0, 1.0));
}

namespace {

bool wall_between(const OccupancyGrid &world, const Eigen::Vector2d &a, const Eigen::Vector2d &b, double stop_short) {
  const double len = (b - a).norm();
  if (len <= stop_short) {
    return false;
  }
  const double spacing = world.resolution() / 4.0;
  const Eigen::Vector2d d = (b - a) / len;
  for (double s = spacing; s < len - stop_short; s += spacing) {
    const Eigen::Vector2d p = a + s * d;
    const Cell c = world.world_to_cell(p.x(), p.y());
    if (world.in_bounds(c) && world.occupied(c)) {
      return true;
    }
  }
  return false;
}

} // namespace

perception::PerceptionFrame render_observation(const RobotState &state, const OccupancyGrid &world,
                                               const perception::SynonymTable &synonyms,
                                               const RenderOptions &options) {
  using perception::Pixel;
  const auto &k = world.intrinsics;
  k.validate();
  perception::PerceptionFrame frame;
  frame.intrinsics = k;
  frame.depth.width = k.width;
  frame.depth.height = k.height;
  frame.depth.data.assign(static_cast<std::size_t>(k.width) * k.height, std::numeric_limits<float>::quiet_NaN());
  std::vector<int> owner(frame.depth.data.size(), -1);

  const double c = std::cos(state.pose.theta), s = std::sin(state.pose.theta);
  const double half_fov = k.horizontal_half_fov();
  const Eigen::Vector2d eye(state.pose.x, state.pose.y);
  for (std::size_t i = 0; i < world.objects.size(); ++i) {
    const auto &obj = world.objects[i];
    const double dx = obj.x - state.pose.x, dy = obj.y - state.pose.y;
    const double fwd = c * dx + s * dy;
    const double left = -s * dx + c * dy;
    if (fwd <= 0.05 || std::abs(std::atan2(left, fwd)) > half_fov) {
      continue;
    }
    if (wall_between(world, eye, {obj.x, obj.y}, obj.radius)) {
      continue;
    }
    const Eigen::Vector3d cam(-left, -(obj.z - options.camera_height), fwd);
    const double uc = k.fx * cam.x() / cam.z() + k.cx;
    const double vc = k.fy * cam.y() / cam.z() + k.cy;
    const double r = k.fx * obj.radius / fwd;
    const int u0 = std::max(0, static_cast<int>(std::floor(uc - r)));
    const int u1 = std::min(k.width - 1, static_cast<int>(std::ceil(uc + r)));
    const int v0 = std::max(0, static_cast<int>(std::floor(vc - r)));
    const int v1 = std::min(k.height - 1, static_cast<int>(std::ceil(vc + r)));
    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        if ((u - uc) * (u - uc) + (v - vc) * (v - vc) > r * r) {
          continue;
        }
        const std::size_t at = static_cast<std::size_t>(v) * k.width + u;
        if (owner[at] < 0 || fwd < frame.depth.data[at]) {
          owner[at] = static_cast<int>(i);
          frame.depth.data[at] = static_cast<float>(fwd);
        }
      }
    }
  }

  std::vector<std::vector<Pixel>> pixels(world.objects.size());
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const int o = owner[static_cast<std::size_t>(v) * k.width + u];
      if (o >= 0) {
        pixels[static_cast<std::size_t>(o)].push_back({u, v});
      }
    }
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> noise(-options.noise, options.noise);
  for (std::size_t i = 0; i < world.objects.size(); ++i) {
    if (pixels[i].size() < 3) {
      continue;
    }
    const auto &obj = world.objects[i];
    perception::MaskCandidate m;
    m.id = static_cast<int>(i) + 1;
    m.pixels = std::move(pixels[i]);
    const double eta_region = region_degradation(obj.illumination, obj.occluded_fraction);
    for (const auto &label : options.vocabulary) {
      const double a = synonyms.affinity(obj.label, label);
      m.labels.push_back(label);
      m.scores.push_back(a + (options.noise > 0 ? noise(rng) : 0.0));
      m.eta.push_back(eta_region * a);
    }
    m.source_confidence = source_confidence(obj.illumination, obj.occluded_fraction);
    frame.masks.push_back(std::move(m));
  }
  return frame;
}

std::vector<double> SyntheticMonocularDepth::predict(const std::vector<perception::Pixel> &pixels) const {
  std::vector<double> out;
  out.reserve(pixels.size());
  for (auto p : pixels) {
    if (p.u < 0 || p.v < 0 || p.u >= truth_.width || p.v >= truth_.height) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    std::mt19937_64 rng(seed_ ^ (static_cast<std::uint64_t>(p.v) * 1000003ULL + static_cast<std::uint64_t>(p.u)));
    std::uniform_real_distribution<double> f(0.9, 1.1);
    out.push_back(static_cast<double>(truth_.at(p.u, p.v)) * f(rng));
  }
  return out;
}

Eigen::Vector3d camera_to_world(const Eigen::Vector3d &point_cam, const Pose2 &pose, double camera_height) {
  const Eigen::Vector3d b = perception::to_base_frame(point_cam, perception::default_camera_mount(camera_height));
  const double c = std::cos(pose.theta), s = std::sin(pose.theta);
  return {pose.x + c * b.x() - s * b.y(), pose.y + s * b.x() + c * b.y(), b.z()};
}

} // namespace babelbot::sim
