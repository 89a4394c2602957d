#include "babelbot/actions.hpp"
#include "babelbot/error.hpp"
#include "babelbot/exec.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

using namespace babelbot;
using namespace babelbot::exec;
using engine::ActionPrimitive;

namespace {

constexpr double kPi = std::numbers::pi;

const perception::SynonymTable &synonyms() {
  static const auto t = perception::SynonymTable::load(testing_support::data_dir() / "synonyms.json");
  return t;
}

const ResponseCatalog &responses() {
  static const auto c = ResponseCatalog::load_directory(testing_support::data_dir() / "responses");
  return c;
}

sim::OccupancyGrid office() {
  static const auto g = sim::OccupancyGrid::load(testing_support::data_dir() / "maps" / "office.json");
  return g;
}

/// Open 20 m x 20 m room with walls only on the border.
sim::OccupancyGrid open_room() {
  sim::OccupancyGrid g(200, 200, 0.1);
  for (int i = 0; i < 200; ++i) {
    g.set_occupied({i, 0}, true);
    g.set_occupied({i, 199}, true);
    g.set_occupied({0, i}, true);
    g.set_occupied({199, i}, true);
  }
  g.destinations["middle"] = {10, 10, 0};
  return g;
}

engine::ActionPlan plan_of(const std::vector<std::string> &lines) {
  std::vector<std::string> numbered;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    numbered.push_back("Action " + std::to_string(i + 1) + ": " + lines[i]);
  }
  auto plan = engine::parse_action_lines(numbered);
  EXPECT_FALSE(plan.parse_failed()) << plan.unparsed_lines.front();
  return plan;
}

class Spy : public ExecutionObserver {
public:
  void on_twist(const sim::TwistCommand &t, double) override { twists.push_back(t); }
  void on_tick(const sim::RobotState &s, std::size_t, double) override {
    ++ticks;
    poses.push_back(s.pose);
  }
  void on_action_end(std::size_t i, const ActionRecord &) override { ended.push_back(i); }
  void on_response(const QueryResponse &r) override { texts.push_back(r.text); }
  std::vector<sim::TwistCommand> twists;
  std::vector<sim::Pose2> poses;
  std::vector<std::size_t> ended;
  std::vector<std::string> texts;
  int ticks = 0;
};

ExecutionContext context(Spy *spy = nullptr, const std::string &lang = "en") {
  ExecutionContext ctx;
  ctx.responses = &responses();
  ctx.observer = spy;
  ctx.language = lang;
  return ctx;
}

} // namespace

TEST(GoalReached, Examples) {
  const GoalSpec goal{{1.0, 1.0}, 0.2};
  EXPECT_TRUE(goal_reached({1.15, 1.0, 0}, goal));
  EXPECT_FALSE(goal_reached({1.25, 1.0, 0}, goal));
  EXPECT_TRUE(goal_reached({1.0, 1.0, 2.0}, goal));
  EXPECT_ERROR_CODE(goal_reached({0, 0, 0}, GoalSpec{{0, 0}, 0.0}), ErrorCode::PreconditionFailed);
}

TEST(Compile, CircleRadiusOneAtOneMetrePerSecond) {
  const auto t = compile(engine::PatternMove{engine::PatternShape::Circle, 1.0, 0, 0, 0, engine::TurnDirection::Left,
                                             1.0});
  ASSERT_EQ(t.size(), 1U);
  EXPECT_DOUBLE_EQ(t[0].v, 1.0);
  EXPECT_DOUBLE_EQ(t[0].omega, 1.0);
  EXPECT_DOUBLE_EQ(t[0].duration, 2 * kPi);
}

TEST(Compile, MoveLinear) {
  const auto t = compile(engine::MoveLinear{engine::LinearDirection::Forward, 2.0, 0.2});
  ASSERT_EQ(t.size(), 1U);
  EXPECT_DOUBLE_EQ(t[0].v, 0.2);
  EXPECT_DOUBLE_EQ(t[0].omega, 0.0);
  EXPECT_DOUBLE_EQ(t[0].duration, 10.0);
  const auto back = compile(engine::MoveLinear{engine::LinearDirection::Backward, 1.0, 0.5});
  EXPECT_DOUBLE_EQ(back[0].v, -0.5);
  EXPECT_DOUBLE_EQ(back[0].duration, 2.0);
}

TEST(Compile, Rotate) {
  const auto t = compile(engine::Rotate{engine::TurnDirection::Right, 90, 30});
  ASSERT_EQ(t.size(), 1U);
  EXPECT_DOUBLE_EQ(t[0].v, 0.0);
  EXPECT_NEAR(t[0].omega, -kPi / 6, 1e-15);
  EXPECT_NEAR(t[0].duration, 3.0, 1e-12);
}

TEST(Compile, RectangleMatchesSegmentOracle) {
  const auto t = compile(engine::PatternMove{engine::PatternShape::Rectangle, 0, 0, 3.0, 2.0,
                                             engine::TurnDirection::Left, 0.5});
  // exec_oracle.py
  ASSERT_EQ(t.size(), 8U);
  double drive = 0, total = 0;
  for (const auto &s : t) {
    drive += s.v != 0 ? s.duration : 0.0;
    total += s.duration;
  }
  EXPECT_NEAR(drive, 20.0, 1e-12);
  EXPECT_NEAR(total, 32.0, 1e-12);
  const auto end = nominal_end_pose({0, 0, 0}, t);
  EXPECT_NEAR(end.x, 0.0, 1e-12);
  EXPECT_NEAR(end.y, 0.0, 1e-12);
  EXPECT_NEAR(sim::normalize_angle(end.theta), 0.0, 1e-12);
}

TEST(Compile, LShapeAndArcMatchOracle) {
  const auto l = compile(engine::PatternMove{engine::PatternShape::LShape, 0, 0, 2.0, 1.0,
                                             engine::TurnDirection::Right, 0.5});
  ASSERT_EQ(l.size(), 3U);
  const auto le = nominal_end_pose({0, 0, 0}, l);
  EXPECT_NEAR(le.x, 2.0, 1e-12);
  EXPECT_NEAR(le.y, -1.0, 1e-12);
  EXPECT_NEAR(le.theta, -kPi / 2, 1e-12);
  const auto a = compile(engine::PatternMove{engine::PatternShape::Arc, 2.0, 90, 0, 0, engine::TurnDirection::Left,
                                             0.5});
  const auto ae = nominal_end_pose({0, 0, 0}, a);
  EXPECT_NEAR(ae.x, 2.0, 1e-12);
  EXPECT_NEAR(ae.y, 2.0, 1e-12);
  EXPECT_NEAR(ae.theta, kPi / 2, 1e-12);
}

TEST(Compile, TightCircleSlowsDownToRespectTurnRate) {
  const auto t = compile(engine::PatternMove{engine::PatternShape::Circle, 0.2, 0, 0, 0, engine::TurnDirection::Left,
                                             1.0});
  EXPECT_LE(std::abs(t[0].omega), kPi / 2 + 1e-12);
  EXPECT_NEAR(t[0].v / t[0].omega, 0.2, 1e-12);
}

TEST(Compile, SessionCeilingApplies) {
  MotionLimits lim;
  lim.max_linear = 0.5;
  const auto t = compile(engine::MoveLinear{engine::LinearDirection::Forward, 2.0, 1.0}, lim);
  EXPECT_DOUBLE_EQ(t[0].v, 0.5);
  EXPECT_DOUBLE_EQ(t[0].duration, 4.0);
}

TEST(Compile, QueriesAndNavigationAreEmpty) {
  EXPECT_TRUE(compile(engine::ReportPose{}).empty());
  EXPECT_TRUE(compile(engine::NavigateToNamed{"kitchen", 0.2}).empty());
  EXPECT_TRUE(compile(engine::Wait{0.0}).empty());
  EXPECT_EQ(compile(engine::Wait{2.0}).size(), 1U);
}

TEST(CompileProperty, TwistsRespectSpeedBounds) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> pos(0.05, 5.0), speed(0.01, 3.0), ang(1, 720), rate(1, 400);
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < 1000; ++i) {
    const auto dir = coin(rng) ? engine::TurnDirection::Left : engine::TurnDirection::Right;
    const std::vector<ActionPrimitive> actions = {
        engine::MoveLinear{coin(rng) ? engine::LinearDirection::Forward : engine::LinearDirection::Backward, pos(rng),
                           speed(rng)},
        engine::Rotate{dir, ang(rng), rate(rng)},
        engine::PatternMove{engine::PatternShape::Circle, pos(rng), 0, 0, 0, dir, speed(rng)},
        engine::PatternMove{engine::PatternShape::Arc, pos(rng), ang(rng), 0, 0, dir, speed(rng)},
        engine::PatternMove{engine::PatternShape::Rectangle, 0, 0, pos(rng), pos(rng), dir, speed(rng)},
        engine::PatternMove{engine::PatternShape::LShape, 0, 0, pos(rng), pos(rng), dir, speed(rng)},
    };
    for (const auto &a : actions) {
      for (const auto &t : compile(a)) {
        EXPECT_LE(std::abs(t.v), 1.0 + 1e-12);
        EXPECT_LE(std::abs(t.omega), kPi / 2 + 1e-12);
        EXPECT_GT(t.duration, 0.0);
      }
    }
  }
}

TEST(Execute, CircleClosesWithinMicrometre) {
  World world(open_room(), synonyms());
  world.simulator.reset({10, 10, 0.3});
  auto ctx = context();
  const auto trace = execute_plan(plan_of({"Move in a circle of radius 1 m at 1 m/s."}), Approval::Approved, world,
                                  ctx);
  EXPECT_EQ(trace.s_n, 1);
  EXPECT_LT(std::hypot(trace.final_pose.x - 10, trace.final_pose.y - 10), 1e-6);
  EXPECT_NEAR(world.simulator.time(), 2 * kPi, 1e-9);
}

TEST(Execute, MoveForwardTwoMetres) {
  World world(open_room(), synonyms());
  world.simulator.reset({5, 5, kPi / 4});
  Spy spy;
  auto ctx = context(&spy);
  const auto trace =
      execute_plan(plan_of({"Move forward 2 m at 0.2 m/s."}), Approval::Approved, world, ctx);
  ASSERT_EQ(trace.per_action.size(), 1U);
  EXPECT_EQ(trace.per_action[0].status, ActionStatus::Success);
  EXPECT_EQ(trace.s_n, 1);
  EXPECT_TRUE(goal_reached(trace.final_pose, {{5 + std::sqrt(2.0), 5 + std::sqrt(2.0)}, 0.2}));
  EXPECT_NEAR(trace.per_action[0].ended_at - trace.per_action[0].started_at, 10.0, 1e-9);
  EXPECT_EQ(spy.ticks, 200);
  EXPECT_EQ(trace.first_output_at, 0.0);
}

TEST(Execute, PendingMultistepPlanThrowsAndEmitsNothing) {
  World world(open_room(), synonyms());
  world.simulator.reset({5, 5, 0});
  Spy spy;
  auto ctx = context(&spy);
  const auto plan = plan_of({"Move forward 1 m at 0.2 m/s.", "Turn left 90 deg at 30 deg/s."});
  ASSERT_TRUE(plan.requires_confirmation);
  EXPECT_ERROR_CODE(execute_plan(plan, Approval::Pending, world, ctx), ErrorCode::NotApproved);
  EXPECT_TRUE(spy.twists.empty());
  EXPECT_EQ(world.simulator.time(), 0.0);
}

TEST(Execute, RejectedPlanIsSkippedWithoutMotion) {
  World world(open_room(), synonyms());
  world.simulator.reset({5, 5, 0});
  Spy spy;
  auto ctx = context(&spy);
  const auto plan = plan_of({"Move forward 1 m at 0.2 m/s.", "Turn left 90 deg at 30 deg/s."});
  const auto trace = execute_plan(plan, Approval::Rejected, world, ctx);
  EXPECT_TRUE(spy.twists.empty());
  EXPECT_EQ(spy.ticks, 0);
  EXPECT_EQ(trace.twist_count, 0U);
  ASSERT_EQ(trace.per_action.size(), 2U);
  for (const auto &a : trace.per_action) {
    EXPECT_EQ(a.status, ActionStatus::Skipped);
  }
  EXPECT_EQ(trace.final_pose.x, 5.0);
  EXPECT_FALSE(trace.first_output_at.has_value());
}

TEST(Execute, TraceListsEveryPrimitiveOnce) {
  World world(office(), synonyms());
  world.simulator.reset({3, 6, 0});
  Spy spy;
  auto ctx = context(&spy);
  const auto plan = plan_of({"Move forward 1 m at 0.5 m/s.", "Turn left 90 deg at 45 deg/s.", "Wait 1 s.",
                             "Report current position and orientation.", "Move backward 0.5 m at 0.5 m/s."});
  const auto trace = execute_plan(plan, Approval::Approved, world, ctx);
  ASSERT_EQ(trace.per_action.size(), plan.actions.size());
  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    EXPECT_EQ(trace.per_action[i].primitive, engine::format_action(plan.actions[i]));
    EXPECT_EQ(trace.per_action[i].status, ActionStatus::Success) << trace.per_action[i].detail;
  }
  EXPECT_EQ(spy.ended, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(trace.s_n, 1);
  EXPECT_NEAR(trace.final_pose.x, 4.0, 1e-9);
  EXPECT_NEAR(trace.final_pose.y, 5.5, 1e-9);
  ASSERT_EQ(spy.texts.size(), 1U);
  EXPECT_NE(spy.texts[0].find("x = 4, y = 6, facing 90°"), std::string::npos) << spy.texts[0];
}

TEST(Execute, NavigateToNamedDestination) {
  World world(office(), synonyms());
  world.simulator.reset({3, 6, 0});
  auto ctx = context();
  const auto trace = execute_plan(plan_of({"Navigate to the kitchen at 0.5 m/s."}), Approval::Approved, world, ctx);
  EXPECT_EQ(trace.per_action[0].status, ActionStatus::Success) << trace.per_action[0].detail;
  EXPECT_TRUE(goal_reached(trace.final_pose, {{13, 8}, 0.2}));
  EXPECT_FALSE(world.simulator.state().collided);
}

TEST(Execute, NamedDestinationWithYaw) {
  World world(office(), synonyms());
  world.simulator.reset({13, 8, 1.0});
  auto ctx = context();
  const auto trace = execute_plan(plan_of({"Navigate to the home at 0.5 m/s."}), Approval::Approved, world, ctx);
  EXPECT_EQ(trace.per_action[0].status, ActionStatus::Success) << trace.per_action[0].detail;
  EXPECT_NEAR(trace.final_pose.theta, 0.0, 1e-9);
}

TEST(Execute, UnknownDestinationAndBlockedGoalFail) {
  World world(office(), synonyms());
  world.simulator.reset({3, 6, 0});
  auto ctx = context();
  auto trace = execute_plan(plan_of({"Navigate to the garage at 0.5 m/s."}), Approval::Approved, world, ctx);
  EXPECT_EQ(trace.per_action[0].status, ActionStatus::Failed);
  EXPECT_EQ(trace.s_n, 0);
  trace = execute_plan(plan_of({"Navigate to the coordinates x = 10, y = 5, z = 0 at 0.5 m/s.",
                                "Turn left 90 deg at 30 deg/s."}),
                       Approval::Approved, world, ctx);
  EXPECT_EQ(trace.per_action[0].status, ActionStatus::Failed);
  EXPECT_NE(trace.per_action[0].detail.find("NoPath"), std::string::npos);
  EXPECT_EQ(trace.per_action[1].status, ActionStatus::Skipped);
  EXPECT_EQ(trace.s_n, 0);
}

TEST(ExecuteProperty, RandomGoalsInOpenRoomAllReached) {
  World world(open_room(), synonyms());
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> coord(1.0, 19.0), yaw(-kPi, kPi);
  auto ctx = context();
  int reached = 0;
  for (int i = 0; i < 50; ++i) {
    world.simulator.reset({coord(rng), coord(rng), yaw(rng)});
    const double gx = coord(rng), gy = coord(rng);
    engine::ActionPlan plan;
    plan.actions = {engine::NavigateToCoords{gx, gy, 0, 1.0}};
    const auto trace = execute_plan(plan, Approval::Approved, world, ctx);
    reached += goal_reached(trace.final_pose, {{gx, gy}, 0.2}) && trace.s_n == 1 ? 1 : 0;
  }
  EXPECT_EQ(reached, 50);
}

TEST(Execute, NavigateToDetectedChair) {
  World world(office(), synonyms());
  world.simulator.reset({3, 6, 0});
  auto ctx = context();
  ctx.instruction = "Move toward the chair you detected.";
  const auto trace =
      execute_plan(plan_of({"Navigate to the detected chair at 0.5 m/s."}), Approval::Approved, world, ctx);
  ASSERT_EQ(trace.per_action[0].status, ActionStatus::Success) << trace.per_action[0].detail;
  EXPECT_NE(trace.per_action[0].detail.find("chair"), std::string::npos);
  const double d = std::hypot(trace.final_pose.x - 7.0, trace.final_pose.y - 8.0);
  EXPECT_LT(d, 1.6);
  EXPECT_GT(d, 0.6);
}

TEST(Execute, NavigateToMissingObjectFails) {
  World world(office(), synonyms());
  world.simulator.reset({1.0, 5.0, kPi}); // facing the west wall
  auto ctx = context();
  const auto trace =
      execute_plan(plan_of({"Navigate to the detected chair at 0.5 m/s."}), Approval::Approved, world, ctx);
  EXPECT_EQ(trace.per_action[0].status, ActionStatus::Failed);
  EXPECT_NE(trace.per_action[0].detail.find("UnreachableObject"), std::string::npos);
}

TEST(Execute, GuardTakesBranchOnConfidentDetection) {
  World world(office(), synonyms());
  world.simulator.reset({3, 6, 0}); // person at (7.5, 4) in view
  auto ctx = context();
  const auto plan =
      plan_of({"If detection of person above 0.8: Capture image. Else: Turn left 90 deg at 30 deg/s."});
  const auto trace = execute_plan(plan, Approval::Approved, world, ctx);
  EXPECT_EQ(trace.per_action[0].status, ActionStatus::Success);
  EXPECT_EQ(trace.snapshots.size(), 1U);
  EXPECT_EQ(trace.final_pose.theta, 0.0);
  EXPECT_EQ(trace.per_action[0].detail.rfind("condition met", 0), 0U);
}

TEST(Execute, GuardFallsBackWhenNothingConfident) {
  World world(office(), synonyms());
  world.simulator.reset({1.0, 5.0, kPi});
  auto ctx = context();
  const auto plan =
      plan_of({"If detection of person above 0.8: Capture image. Else: Turn left 10 deg at 30 deg/s."});
  const auto trace = execute_plan(plan, Approval::Approved, world, ctx);
  EXPECT_TRUE(trace.snapshots.empty());
  EXPECT_NEAR(trace.final_pose.theta, -kPi + 10 * kPi / 180, 1e-9);
}

TEST(Execute, GuardInterruptsFallbackWhenConditionAppears) {
  World world(office(), synonyms());
  world.simulator.reset({3, 6, kPi}); // person behind; turning left brings it into view
  auto ctx = context();
  const auto plan =
      plan_of({"If detection of person above 0.8: Capture image. Else: Turn left 180 deg at 30 deg/s."});
  const auto trace = execute_plan(plan, Approval::Approved, world, ctx);
  EXPECT_EQ(trace.snapshots.size(), 1U);
  EXPECT_LT(world.simulator.time(), 6.0);
  EXPECT_NE(trace.per_action[0].detail.find("during fallback"), std::string::npos);
}

TEST(Execute, TravelTimeGuard) {
  World world(office(), synonyms());
  world.simulator.reset({3, 6, 0});
  auto ctx = context();
  const auto trace = execute_plan(
      plan_of({"If travel time to x = 5, y = 5, z = 0 at 1 m/s over 10 s: Navigate to the kitchen at 0.2 m/s. "
               "Else: Navigate to the coordinates x = 5, y = 5, z = 0 at 1 m/s."}),
      Approval::Approved, world, ctx);
  EXPECT_EQ(trace.s_n, 1);
  EXPECT_TRUE(goal_reached(trace.final_pose, {{5, 5}, 0.2}));
}

TEST(Execute, ObstaclePausesMoveAndFailsWhenNeverCleared) {
  auto grid = open_room();
  grid.objects.push_back({"person", 8.0, 5.0, 0.9, 0.3, 1.0, 0.0});
  World world(grid, synonyms());
  world.simulator.reset({5, 5, 0});
  auto ctx = context();
  ctx.max_pause = 2.0;
  const auto trace = execute_plan(plan_of({"Move forward 5 m at 1 m/s."}), Approval::Approved, world, ctx);
  EXPECT_EQ(trace.per_action[0].status, ActionStatus::Failed);
  EXPECT_NE(trace.per_action[0].detail.find("blocked"), std::string::npos);
  // stopped 0.5 m short of the person plus both radii
  EXPECT_NEAR(trace.final_pose.x, 8.0 - 0.6 - 0.5, 0.06);
}

TEST(Execute, AbortStopsAtTickBoundary) {
  World world(open_room(), synonyms());
  world.simulator.reset({5, 5, 0});
  std::atomic<bool> abort{false};
  class Aborter : public ExecutionObserver {
  public:
    explicit Aborter(std::atomic<bool> &flag) : flag_(flag) {}
    void on_tick(const sim::RobotState &, std::size_t, double) override {
      if (++ticks == 10) {
        flag_ = true;
      }
    }
    int ticks = 0;

  private:
    std::atomic<bool> &flag_;
  } aborter(abort);
  auto ctx = context();
  ctx.observer = &aborter;
  ctx.abort = &abort;
  const auto trace = execute_plan(plan_of({"Move forward 2 m at 0.2 m/s.", "Turn left 90 deg at 30 deg/s."}),
                                  Approval::Approved, world, ctx);
  EXPECT_EQ(aborter.ticks, 10);
  EXPECT_TRUE(trace.aborted);
  EXPECT_EQ(trace.per_action[0].status, ActionStatus::Aborted);
  EXPECT_EQ(trace.per_action[1].status, ActionStatus::Skipped);
  EXPECT_EQ(trace.s_n, 0);
  EXPECT_NEAR(trace.final_pose.x, 5.1, 1e-9);
}

TEST(Execute, LimitSpeedPersistsForSession) {
  World world(open_room(), synonyms());
  world.simulator.reset({5, 5, 0});
  Spy spy;
  auto ctx = context(&spy);
  execute_plan(plan_of({"Limit maximum speed to 0.5 m/s."}), Approval::Approved, world, ctx);
  EXPECT_DOUBLE_EQ(ctx.speed_ceiling, 0.5);
  execute_plan(plan_of({"Move forward 1 m at 1 m/s."}), Approval::Approved, world, ctx);
  ASSERT_EQ(spy.twists.size(), 1U);
  EXPECT_DOUBLE_EQ(spy.twists[0].v, 0.5);
  EXPECT_NE(spy.texts[0].find("0.5 m/s"), std::string::npos);
}

TEST(Execute, CollisionFailsAction) {
  World world(open_room(), synonyms());
  world.simulator.reset({1.0, 10, kPi});
  auto ctx = context();
  ctx.obstacle_pause_range = 0.0; // disable the pause so the wall is hit
  const auto trace = execute_plan(plan_of({"Move forward 2 m at 0.5 m/s."}), Approval::Approved, world, ctx);
  EXPECT_EQ(trace.per_action[0].status, ActionStatus::Failed);
  EXPECT_EQ(trace.per_action[0].detail, "collision");
  EXPECT_FALSE(world.simulator.inflated().occupied_at(trace.final_pose.x, trace.final_pose.y));
}

TEST(Execute, ParseFailedPlanDoesNotRun) {
  World world(open_room(), synonyms());
  world.simulator.reset({5, 5, 0});
  auto plan = engine::parse_action_lines({"Action 1: Move forward 1 m at 0.2 m/s.", "Action 2: Dance wildly."});
  ASSERT_TRUE(plan.parse_failed());
  auto ctx = context();
  const auto trace = execute_plan(plan, Approval::Approved, world, ctx);
  EXPECT_EQ(trace.s_n, 0);
  EXPECT_EQ(trace.twist_count, 0U);
}

TEST(Query, ReportPoseFormatting) {
  World world(open_room(), synonyms());
  world.simulator.reset({2, 3, kPi / 2});
  auto ctx = context();
  const auto r = handle_query(engine::ReportPose{}, world, ctx);
  EXPECT_EQ(r.text, "I am at x = 2, y = 3, facing 90° (north).");
  EXPECT_FALSE(r.fallback);
  EXPECT_DOUBLE_EQ(r.data["yaw_deg"].get<double>(), 90.0);
  ctx.language = "de";
  world.simulator.reset({2.5, 3, -kPi / 2});
  const auto de = handle_query(engine::ReportPose{}, world, ctx);
  EXPECT_EQ(de.text, "Ich bin bei x = 2,5, y = 3 und schaue nach 270° (Süden).");
  EXPECT_EQ(de.language, "de");
}

TEST(Query, UntranslatedLanguageFallsBackWithFlag) {
  World world(open_room(), synonyms());
  world.simulator.reset({2, 3, 0});
  auto ctx = context(nullptr, "it");
  const auto r = handle_query(engine::ReportPose{}, world, ctx);
  EXPECT_TRUE(r.fallback);
  EXPECT_EQ(r.language, "en");
  EXPECT_EQ(r.text, "I am at x = 2, y = 3, facing 0° (east).");
}

TEST(Query, EveryShippedLanguageHasEveryKey) {
  const std::vector<std::string> keys = {"pose",      "surroundings_none", "surroundings_header", "surroundings_item",
                                         "image_captured", "plan_confirm", "plan_discarded", "reprompt",
                                         "executed",  "execution_failed",  "aborted", "speed_limited",
                                         "llm_unavailable", "not_understood"};
  for (const char *lang : {"en", "es", "de", "fr", "ru", "zh", "ar", "hi", "sw", "pcm"}) {
    ASSERT_TRUE(responses().has_language(lang)) << lang;
    for (const auto &k : keys) {
      EXPECT_FALSE(responses().render(k, lang).fallback) << lang << " " << k;
    }
  }
}

TEST(Query, DescribeEmptyView) {
  World world(office(), synonyms());
  world.simulator.reset({1.0, 5.0, kPi});
  auto ctx = context();
  const auto r = handle_query(engine::DescribeSurroundings{}, world, ctx);
  EXPECT_EQ(r.text, "No objects are visible in my camera's field of view.");
  EXPECT_TRUE(r.data["objects"].empty());
}

TEST(Query, DescribeListsObjectsNearestFirst) {
  World world(office(), synonyms());
  world.simulator.reset({3, 6, 0});
  auto ctx = context(nullptr, "es");
  const auto r = handle_query(engine::DescribeSurroundings{}, world, ctx);
  // the table is seen through the north doorway
  ASSERT_EQ(r.data["objects"].size(), 3U);
  EXPECT_EQ(r.data["objects"][0]["label"], "chair");
  EXPECT_EQ(r.data["objects"][1]["label"], "person");
  EXPECT_EQ(r.data["objects"][2]["label"], "table");
  EXPECT_EQ(r.text.rfind("Puedo ver: silla", 0), 0U) << r.text;
}

TEST(Query, CaptureImageWritesPng) {
  World world(office(), synonyms());
  world.simulator.reset({3, 6, 0});
  auto ctx = context();
  ctx.session_id = "s1";
  ctx.turn = 4;
  ctx.snapshot_dir = std::filesystem::temp_directory_path() / "babelbot_snapshot_test";
  std::filesystem::remove_all(ctx.snapshot_dir);
  const auto r = handle_query(engine::CaptureImage{}, world, ctx, 2);
  ASSERT_TRUE(r.snapshot.has_value());
  EXPECT_EQ(*r.snapshot, "s1/4/2.png");
  const auto file = ctx.snapshot_dir / "s1" / "4" / "2.png";
  ASSERT_TRUE(std::filesystem::exists(file));
  const auto bytes = testing_support::read_file(file);
  EXPECT_EQ(bytes.substr(1, 3), "PNG");
  EXPECT_GT(bytes.size(), 1000U);
  std::filesystem::remove_all(ctx.snapshot_dir);
}

TEST(Query, NonQueryRejected) {
  World world(open_room(), synonyms());
  auto ctx = context();
  EXPECT_ERROR_CODE(handle_query(engine::Wait{1.0}, world, ctx), ErrorCode::PreconditionFailed);
}

TEST(Png, RejectsMismatchedBuffer) {
  EXPECT_ERROR_CODE(write_png("/tmp/x.png", 2, 2, std::vector<std::uint8_t>(5)), ErrorCode::InvalidFormat);
  EXPECT_ERROR_CODE(write_png("/proc/forbidden/x.png", 1, 1, std::vector<std::uint8_t>(3)), ErrorCode::IoError);
}

TEST(Format, LanguageNumbers) {
  EXPECT_EQ(format_for_language(2.0, "en"), "2");
  EXPECT_EQ(format_for_language(2.345, "en"), "2.35");
  EXPECT_EQ(format_for_language(2.5, "fr"), "2,5");
  EXPECT_EQ(format_for_language(-0.001, "en"), "0");
}
