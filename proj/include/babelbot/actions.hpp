#pragma once

#include "babelbot/box.hpp"
#include "babelbot/langid.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

namespace babelbot::engine {

// Robot status bounds advertised in the system prompt.
inline constexpr double kMinLinearSpeed = 0.2;     // m/s
inline constexpr double kMaxLinearSpeed = 1.0;     // m/s
inline constexpr double kMaxAngularSpeedDeg = 90.0; // deg/s
inline constexpr double kDefaultAngularSpeedDeg = 30.0;

enum class LinearDirection { Forward, Backward };
enum class TurnDirection { Left, Right };
enum class ObjectSelector { BestConfidence, Named };
enum class PatternShape { Circle, Arc, Rectangle, LShape };

struct MoveLinear {
  LinearDirection direction = LinearDirection::Forward;
  double distance = 0.0; // m
  double speed = kMinLinearSpeed;
  bool operator==(const MoveLinear &) const = default;
};

struct Rotate {
  TurnDirection direction = TurnDirection::Left;
  double angle_deg = 90.0;
  double angular_speed_deg = kDefaultAngularSpeedDeg;
  bool operator==(const Rotate &) const = default;
};

struct NavigateToCoords {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double speed = kMinLinearSpeed;
  bool operator==(const NavigateToCoords &) const = default;
};

struct NavigateToNamed {
  std::string destination; // lowercase
  double speed = kMinLinearSpeed;
  bool operator==(const NavigateToNamed &) const = default;
};

struct NavigateToObject {
  std::string label; // empty for BestConfidence
  ObjectSelector selector = ObjectSelector::Named;
  double speed = kMinLinearSpeed;
  bool operator==(const NavigateToObject &) const = default;
};

/// Circle uses radius; Arc uses radius and angle; Rectangle uses length/width;
/// LShape uses length (first leg) and width (second leg).
struct PatternMove {
  PatternShape shape = PatternShape::Circle;
  double radius = 0.0;
  double angle_deg = 0.0;
  double length = 0.0;
  double width = 0.0;
  TurnDirection turn = TurnDirection::Left;
  double speed = kMinLinearSpeed;
  bool operator==(const PatternMove &) const = default;
};

struct Wait {
  double seconds = 0.0;
  bool operator==(const Wait &) const = default;
};

struct DescribeSurroundings {
  bool operator==(const DescribeSurroundings &) const = default;
};
struct ReportPose {
  bool operator==(const ReportPose &) const = default;
};
struct CaptureImage {
  bool operator==(const CaptureImage &) const = default;
};

/// Lowers the session speed ceiling for the rest of the session.
struct LimitSpeed {
  double max_speed = kMaxLinearSpeed;
  bool operator==(const LimitSpeed &) const = default;
};

struct DetectionAbove {
  std::optional<std::string> label;
  double probability = 0.0;
  bool operator==(const DetectionAbove &) const = default;
};
struct ObstacleCloser {
  double distance = 0.0;
  bool operator==(const ObstacleCloser &) const = default;
};
struct ElapsedOver {
  double seconds = 0.0;
  bool operator==(const ElapsedOver &) const = default;
};
struct TravelTimeOver {
  double seconds = 0.0;
  double speed = kMaxLinearSpeed;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  bool operator==(const TravelTimeOver &) const = default;
};

using Condition = std::variant<DetectionAbove, ObstacleCloser, ElapsedOver, TravelTimeOver>;

struct ActionPrimitive;

struct Guarded {
  Condition condition;
  Box<ActionPrimitive> then;
  std::optional<Box<ActionPrimitive>> otherwise;
  bool operator==(const Guarded &) const = default;
};

struct ActionPrimitive {
  using Kind = std::variant<MoveLinear, Rotate, NavigateToCoords, NavigateToNamed, NavigateToObject, PatternMove,
                            Wait, DescribeSurroundings, ReportPose, CaptureImage, LimitSpeed, Guarded>;
  Kind kind;

  template <class T>
    requires(!std::is_same_v<std::decay_t<T>, ActionPrimitive> && std::is_constructible_v<Kind, T>)
  ActionPrimitive(T value) : kind(std::move(value)) {} // NOLINT(google-explicit-constructor)
  ActionPrimitive() : kind(Wait{}) {}

  template <class T>
  [[nodiscard]] bool is() const {
    return std::holds_alternative<T>(kind);
  }
  template <class T>
  [[nodiscard]] const T &as() const {
    return std::get<T>(kind);
  }
  bool operator==(const ActionPrimitive &) const = default;
};

/// Physical motion: linear, rotational, navigation and pattern moves (a guard
/// counts when either branch moves).
bool causes_motion(const ActionPrimitive &action);
bool is_query(const ActionPrimitive &action);

enum class Provenance { LLM, Mock };

struct ActionPlan {
  std::vector<ActionPrimitive> actions;
  langid::LanguageTag language;
  bool requires_confirmation = false;
  Provenance provenance = Provenance::LLM;
  /// Lines whose verb was not recognized; any entry marks the plan failed.
  std::vector<std::string> unparsed_lines;
  /// Parser notes such as speed clamping.
  std::vector<std::string> annotations;

  [[nodiscard]] bool parse_failed() const { return !unparsed_lines.empty(); }
};

/// Canonical English rendering, e.g. "Move forward 2 m at 0.2 m/s.".
std::string format_action(const ActionPrimitive &action);
std::string format_condition(const Condition &condition);
/// Canonical action strings of a plan; unparsed lines are kept verbatim.
std::vector<std::string> canonical_actions(const ActionPlan &plan);
/// "Action k: ..." lines.
std::vector<std::string> format_plan_lines(const ActionPlan &plan);

/// True iff at least two primitives cause physical motion.
bool plan_requires_confirmation(const ActionPlan &plan);

/// Parses "Action <k>: <verb phrase>" lines into primitives. Unknown verbs are
/// kept in `unparsed_lines`; non-monotone numbering and negative parameters throw.
ActionPlan parse_action_lines(const std::vector<std::string> &lines,
                              const langid::LanguageTag &language = langid::make_tag("en", text::Script::Latin),
                              Provenance provenance = Provenance::LLM);

/// Parses a single verb phrase (no "Action k:" prefix). Returns nullopt for an unknown verb.
std::optional<ActionPrimitive> parse_action_phrase(std::string_view phrase, bool decimal_comma = false,
                                                   std::vector<std::string> *annotations = nullptr);

/// Matches the action-line grammar prefix "Action <k>:".
bool is_action_line(std::string_view line);

} // namespace babelbot::engine
