#include "babelbot/actions.hpp"

#include "babelbot/error.hpp"
#include "babelbot/quantity.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>

namespace babelbot::engine {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool starts_with_any(std::string_view s, std::initializer_list<std::string_view> prefixes) {
  return std::any_of(prefixes.begin(), prefixes.end(), [&](std::string_view p) { return s.starts_with(p); });
}

bool contains_any(std::string_view s, std::initializer_list<std::string_view> needles) {
  return std::any_of(needles.begin(), needles.end(),
                     [&](std::string_view n) { return s.find(n) != std::string_view::npos; });
}

std::string strip_trailing(std::string s, std::string_view chars = ".;,!") {
  s = text::trim(s);
  while (!s.empty() && chars.find(s.back()) != std::string_view::npos) {
    s.pop_back();
    s = text::trim(s);
  }
  return s;
}

std::string strip_article(std::string s) {
  for (std::string_view article : {"the ", "a ", "an ", "any "}) {
    if (s.starts_with(article)) {
      return text::trim(s.substr(article.size()));
    }
  }
  return s;
}

const char *direction_word(TurnDirection d) { return d == TurnDirection::Left ? "left" : "right"; }

TurnDirection parse_turn(std::string_view lower) {
  if (contains_any(lower, {"counterclockwise", "counter-clockwise", "anticlockwise", "anti-clockwise"})) {
    return TurnDirection::Left;
  }
  if (contains_any(lower, {"right", "clockwise"})) {
    return TurnDirection::Right;
  }
  return TurnDirection::Left;
}

struct PhraseParser {
  bool decimal_comma = false;
  std::vector<std::string> *annotations = nullptr;

  void note(std::string msg) const {
    if (annotations != nullptr) {
      annotations->push_back(std::move(msg));
    }
  }

  [[nodiscard]] std::vector<Quantity> quantities(std::string_view s, bool allow_negative) const {
    auto qs = scan_quantities(s, decimal_comma);
    if (!allow_negative) {
      for (const auto &q : qs) {
        if (q.negative) {
          fail(ErrorCode::NegativeParameter, "negative parameter in \"" + std::string(s) + "\"");
        }
      }
    }
    return qs;
  }

  static std::optional<double> first(const std::vector<Quantity> &qs, Unit unit, std::size_t skip = 0) {
    for (const auto &q : qs) {
      if (q.unit == unit) {
        if (skip == 0) {
          return q.value;
        }
        --skip;
      }
    }
    return std::nullopt;
  }

  static double require_positive(std::optional<double> v, std::string_view what, std::string_view phrase) {
    if (!v) {
      fail(ErrorCode::UnknownActionVerb, "missing " + std::string(what) + " in \"" + std::string(phrase) + "\"");
    }
    if (*v <= 0.0) {
      fail(ErrorCode::NegativeParameter, std::string(what) + " must be positive in \"" + std::string(phrase) + "\"");
    }
    return *v;
  }

  [[nodiscard]] double linear_speed(const std::vector<Quantity> &qs) const {
    const auto v = first(qs, Unit::MeterPerSecond);
    if (!v) {
      return kMinLinearSpeed;
    }
    if (*v <= 0.0) {
      fail(ErrorCode::NegativeParameter, "speed must be positive");
    }
    const double clamped = std::clamp(*v, kMinLinearSpeed, kMaxLinearSpeed);
    if (clamped != *v) {
      note("speed " + format_number(*v) + " m/s clamped to " + format_number(clamped) + " m/s");
    }
    return clamped;
  }

  [[nodiscard]] double angular_speed(const std::vector<Quantity> &qs) const {
    const auto w = first(qs, Unit::DegreePerSecond);
    if (!w) {
      return kDefaultAngularSpeedDeg;
    }
    if (*w <= 0.0) {
      fail(ErrorCode::NegativeParameter, "angular speed must be positive");
    }
    if (*w > kMaxAngularSpeedDeg) {
      note("angular speed " + format_number(*w) + " deg/s clamped to " + format_number(kMaxAngularSpeedDeg) +
           " deg/s");
      return kMaxAngularSpeedDeg;
    }
    return *w;
  }

  /// Coordinates are unitless or metre values; speeds and durations are skipped.
  static std::vector<double> coordinates(const std::vector<Quantity> &qs) {
    std::vector<double> out;
    for (const auto &q : qs) {
      if (q.unit == Unit::None || q.unit == Unit::Meter) {
        out.push_back(q.value);
      }
    }
    return out;
  }

  std::optional<Condition> condition(std::string_view phrase) const {
    const std::string lower = ascii_lower(phrase);
    if (lower.find("travel time") != std::string::npos || lower.find("take") != std::string::npos) {
      const auto qs = quantities(lower, true);
      const auto coords = coordinates(qs);
      if (coords.size() < 2) {
        return std::nullopt;
      }
      TravelTimeOver c;
      c.x = coords[0];
      c.y = coords[1];
      c.z = coords.size() > 2 ? coords[2] : 0.0;
      c.speed = require_positive(first(qs, Unit::MeterPerSecond), "speed", phrase);
      c.seconds = require_positive(first(qs, Unit::Second), "duration", phrase);
      return c;
    }
    if (lower.find("obstacle") != std::string::npos) {
      const auto qs = quantities(lower, false);
      return ObstacleCloser{require_positive(first(qs, Unit::Meter), "distance", phrase)};
    }
    if (lower.find("detect") != std::string::npos) {
      const auto qs = quantities(lower, false);
      auto p = first(qs, Unit::None);
      if (!p) {
        return std::nullopt;
      }
      if (*p > 1.0) {
        *p /= 100.0;
      }
      DetectionAbove c;
      c.probability = std::clamp(*p, 0.0, 1.0);
      std::size_t start = lower.find("detection of ");
      start = start != std::string::npos ? start + 13 : lower.find("detect ") + 7;
      std::size_t stop = lower.size();
      for (std::string_view marker : {" above", " with", " at ", " over", " >=", " \xE2\x89\xA5"}) {
        const auto pos = lower.find(marker, start);
        if (pos != std::string::npos) {
          stop = std::min(stop, pos);
        }
      }
      std::string label = strip_article(text::trim(lower.substr(start, stop - start)));
      if (!(label.empty() || label == "object" || label == "objects" || label == "anything")) {
        c.label = label;
      }
      return c;
    }
    if (lower.find("time") != std::string::npos || lower.find("elapsed") != std::string::npos) {
      const auto qs = quantities(lower, false);
      return ElapsedOver{require_positive(first(qs, Unit::Second), "duration", phrase)};
    }
    return std::nullopt;
  }

  std::optional<ActionPrimitive> guarded(std::string_view phrase) const {
    const auto colon = phrase.find(':');
    if (colon == std::string_view::npos) {
      return std::nullopt;
    }
    const auto cond = condition(phrase.substr(3, colon - 3));
    if (!cond) {
      return std::nullopt;
    }
    const std::string rest(phrase.substr(colon + 1));
    static const std::regex else_re(R"(\belse\s*[:,]?)", std::regex::icase);
    std::smatch m;
    std::string then_part = rest;
    std::optional<std::string> else_part;
    if (std::regex_search(rest, m, else_re)) {
      then_part = rest.substr(0, static_cast<std::size_t>(m.position(0)));
      else_part = rest.substr(static_cast<std::size_t>(m.position(0) + m.length(0)));
    }
    auto then_action = parse(strip_trailing(then_part));
    if (!then_action) {
      return std::nullopt;
    }
    Guarded g{*cond, Box<ActionPrimitive>(std::move(*then_action)), std::nullopt};
    if (else_part) {
      auto other = parse(strip_trailing(*else_part));
      if (!other) {
        return std::nullopt;
      }
      g.otherwise = Box<ActionPrimitive>(std::move(*other));
    }
    return ActionPrimitive(std::move(g));
  }

  std::optional<ActionPrimitive> pattern(std::string_view phrase, std::string_view lower) const {
    const auto qs = quantities(lower, false);
    PatternMove p;
    p.turn = parse_turn(lower);
    p.speed = linear_speed(qs);
    if (lower.find("circle") != std::string_view::npos) {
      p.shape = PatternShape::Circle;
      double r = require_positive(first(qs, Unit::Meter), "radius", phrase);
      if (lower.find("diameter") != std::string_view::npos && lower.find("radius") == std::string_view::npos) {
        r /= 2.0;
      }
      p.radius = r;
    } else if (lower.find(" arc") != std::string_view::npos) {
      p.shape = PatternShape::Arc;
      p.radius = require_positive(first(qs, Unit::Meter), "radius", phrase);
      p.angle_deg = first(qs, Unit::Degree).value_or(180.0);
      require_positive(p.angle_deg, "arc angle", phrase);
    } else if (contains_any(lower, {"l-shape", "l shape", "l-shaped"})) {
      p.shape = PatternShape::LShape;
      p.length = require_positive(first(qs, Unit::Meter), "first leg", phrase);
      p.width = require_positive(first(qs, Unit::Meter, 1), "second leg", phrase);
    } else if (lower.find("square") != std::string_view::npos) {
      p.shape = PatternShape::Rectangle;
      p.length = require_positive(first(qs, Unit::Meter), "side", phrase);
      p.width = p.length;
    } else {
      p.shape = PatternShape::Rectangle;
      p.length = require_positive(first(qs, Unit::Meter), "length", phrase);
      p.width = require_positive(first(qs, Unit::Meter, 1), "width", phrase);
    }
    return ActionPrimitive(p);
  }

  std::optional<ActionPrimitive> navigate(std::string_view phrase, std::string_view lower) const {
    // Target text follows the first "to"/"toward(s)".
    static const std::regex to_re(R"(\b(?:towards|toward|to)\b)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_search(lower.begin(), lower.end(), m, to_re)) {
      return std::nullopt;
    }
    const std::size_t tail_pos = static_cast<std::size_t>(m.position(0) + m.length(0));
    const std::string tail = text::trim(lower.substr(tail_pos));
    const bool is_coords = contains_any(tail, {"coordinate", "x =", "x="}) || tail.starts_with("(");
    const auto qs = quantities(tail, is_coords);
    const double speed = linear_speed(qs);
    if (is_coords) {
      const auto coords = coordinates(qs);
      if (coords.size() < 2) {
        fail(ErrorCode::UnknownActionVerb, "coordinates missing in \"" + std::string(phrase) + "\"");
      }
      return ActionPrimitive(
          NavigateToCoords{coords[0], coords[1], coords.size() > 2 ? coords[2] : 0.0, speed});
    }
    // Drop a trailing " at <speed>" clause.
    std::string target = tail;
    static const std::regex speed_re(R"(\s+at\s+(?:a\s+speed\s+of\s+)?[0-9][0-9.,]*\s*(?:m/s|meters? per second).*$)");
    target = std::regex_replace(target, speed_re, "");
    target = strip_trailing(target);
    if (const auto pos = target.find("detected"); pos != std::string::npos) {
      if (contains_any(target, {"highest confidence", "most confident", "best", "highest probability"})) {
        return ActionPrimitive(NavigateToObject{"", ObjectSelector::BestConfidence, speed});
      }
      std::string label = text::trim(target.substr(pos + 8));
      if (label.empty() || label == "object") {
        return ActionPrimitive(NavigateToObject{"", ObjectSelector::BestConfidence, speed});
      }
      return ActionPrimitive(NavigateToObject{strip_article(label), ObjectSelector::Named, speed});
    }
    target = strip_article(target);
    if (target.empty()) {
      return std::nullopt;
    }
    return ActionPrimitive(NavigateToNamed{target, speed});
  }

  std::optional<ActionPrimitive> parse(std::string_view raw) const {
    const std::string phrase = strip_trailing(std::string(raw));
    const std::string lower = ascii_lower(phrase);
    if (lower.empty()) {
      return std::nullopt;
    }
    if (lower.starts_with("if ")) {
      return guarded(phrase);
    }
    if (lower.starts_with("stop and ")) {
      return parse(phrase.substr(9));
    }
    if (contains_any(lower, {"in a circle", "in an arc", "in a rectangle", "in a square", "in an l-shape",
                             "in an l shape", "l-shaped path", "rectangle of", "square of", "circle of",
                             "arc of"})) {
      return pattern(phrase, lower);
    }
    if (starts_with_any(lower, {"navigate", "go to", "go towards", "go toward", "head to", "head towards",
                                "move to", "move towards", "move toward", "proceed to", "return to", "drive to",
                                "travel to", "approach"})) {
      return navigate(phrase, lower);
    }
    if (starts_with_any(lower, {"move", "drive", "go", "walk", "travel", "reverse", "back", "advance"}) &&
        contains_any(lower, {"forward", "ahead", "backward", "back", "reverse"})) {
      const auto qs = quantities(lower, false);
      MoveLinear m;
      m.direction = contains_any(lower, {"backward", "back", "reverse"}) ? LinearDirection::Backward
                                                                          : LinearDirection::Forward;
      m.distance = require_positive(first(qs, Unit::Meter), "distance", phrase);
      m.speed = linear_speed(qs);
      return ActionPrimitive(m);
    }
    if (starts_with_any(lower, {"turn", "rotate", "spin"})) {
      const auto qs = quantities(lower, false);
      Rotate r;
      r.direction = parse_turn(lower);
      r.angle_deg = first(qs, Unit::Degree).value_or(90.0);
      require_positive(r.angle_deg, "angle", phrase);
      r.angular_speed_deg = angular_speed(qs);
      return ActionPrimitive(r);
    }
    if (starts_with_any(lower, {"wait", "stay", "pause", "remain", "hold"})) {
      const auto qs = quantities(lower, false);
      auto secs = first(qs, Unit::Second);
      if (!secs) {
        secs = first(qs, Unit::None);
      }
      return ActionPrimitive(Wait{require_positive(secs, "duration", phrase)});
    }
    if (starts_with_any(lower, {"limit", "set", "reduce", "slow"}) && lower.find("speed") != std::string::npos) {
      const auto qs = quantities(lower, false);
      auto v = first(qs, Unit::MeterPerSecond);
      if (!v && lower.find("half") != std::string::npos) {
        v = kMaxLinearSpeed / 2.0;
      }
      const double limit = require_positive(v, "speed limit", phrase);
      return ActionPrimitive(LimitSpeed{std::clamp(limit, kMinLinearSpeed, kMaxLinearSpeed)});
    }
    if (starts_with_any(lower, {"describe", "list", "detect objects", "scan"})) {
      return ActionPrimitive(DescribeSurroundings{});
    }
    if (contains_any(lower, {"capture", "photo", "picture", "snapshot", "image"})) {
      return ActionPrimitive(CaptureImage{});
    }
    if (starts_with_any(lower, {"report", "send", "state", "tell", "give"}) &&
        contains_any(lower, {"position", "pose", "orientation", "location", "coordinates"})) {
      return ActionPrimitive(ReportPose{});
    }
    return std::nullopt;
  }
};

const std::regex &action_line_regex() {
  static const std::regex re(R"(^\s*(?:\*\*)?action\s+(\d+)\s*(?:\*\*)?\s*:\s*(?:\*\*)?\s*(.*)$)", std::regex::icase);
  return re;
}

} // namespace

bool causes_motion(const ActionPrimitive &action) {
  return std::visit(Overloaded{
                        [](const MoveLinear &) { return true; },
                        [](const Rotate &) { return true; },
                        [](const NavigateToCoords &) { return true; },
                        [](const NavigateToNamed &) { return true; },
                        [](const NavigateToObject &) { return true; },
                        [](const PatternMove &) { return true; },
                        [](const Guarded &g) {
                          return causes_motion(*g.then) || (g.otherwise && causes_motion(**g.otherwise));
                        },
                        [](const auto &) { return false; },
                    },
                    action.kind);
}

bool is_query(const ActionPrimitive &action) {
  return action.is<DescribeSurroundings>() || action.is<ReportPose>() || action.is<CaptureImage>();
}

std::string format_condition(const Condition &condition) {
  return std::visit(
      Overloaded{
          [](const DetectionAbove &c) {
            return "detection of " + (c.label ? *c.label : std::string("any object")) + " above " +
                   format_number(c.probability);
          },
          [](const ObstacleCloser &c) { return "obstacle closer than " + format_number(c.distance) + " m"; },
          [](const ElapsedOver &c) { return "elapsed time over " + format_number(c.seconds) + " s"; },
          [](const TravelTimeOver &c) {
            return "travel time to x = " + format_number(c.x) + ", y = " + format_number(c.y) +
                   ", z = " + format_number(c.z) + " at " + format_number(c.speed) + " m/s over " +
                   format_number(c.seconds) + " s";
          },
      },
      condition);
}

std::string format_action(const ActionPrimitive &action) {
  const auto at = [](double speed) { return " at " + format_number(speed) + " m/s."; };
  return std::visit(
      Overloaded{
          [&](const MoveLinear &m) {
            return std::string("Move ") + (m.direction == LinearDirection::Forward ? "forward " : "backward ") +
                   format_number(m.distance) + " m" + at(m.speed);
          },
          [](const Rotate &r) {
            return std::string("Turn ") + direction_word(r.direction) + " " + format_number(r.angle_deg) +
                   " deg at " + format_number(r.angular_speed_deg) + " deg/s.";
          },
          [&](const NavigateToCoords &n) {
            return "Navigate to the coordinates x = " + format_number(n.x) + ", y = " + format_number(n.y) +
                   ", z = " + format_number(n.z) + at(n.speed);
          },
          [&](const NavigateToNamed &n) { return "Navigate to the " + n.destination + at(n.speed); },
          [&](const NavigateToObject &n) {
            if (n.selector == ObjectSelector::BestConfidence) {
              return "Navigate to the detected object with the highest confidence" + at(n.speed);
            }
            return "Navigate to the detected " + n.label + at(n.speed);
          },
          [&](const PatternMove &p) {
            const std::string turn = p.turn == TurnDirection::Right ? " clockwise" : "";
            switch (p.shape) {
            case PatternShape::Circle:
              return "Move in a circle of radius " + format_number(p.radius) + " m" + turn + at(p.speed);
            case PatternShape::Arc:
              return "Move in an arc of radius " + format_number(p.radius) + " m through " +
                     format_number(p.angle_deg) + " deg" + turn + at(p.speed);
            case PatternShape::Rectangle:
              return "Move in a rectangle of length " + format_number(p.length) + " m and width " +
                     format_number(p.width) + " m" + turn + at(p.speed);
            case PatternShape::LShape:
              return "Move in an L-shape of " + format_number(p.length) + " m horizontal and " +
                     format_number(p.width) + " m vertical" + turn + at(p.speed);
            }
            return std::string();
          },
          [](const Wait &w) { return "Wait " + format_number(w.seconds) + " s."; },
          [](const DescribeSurroundings &) { return std::string("Describe surroundings."); },
          [](const ReportPose &) { return std::string("Report current position and orientation."); },
          [](const CaptureImage &) { return std::string("Capture image."); },
          [](const LimitSpeed &l) { return "Limit maximum speed to " + format_number(l.max_speed) + " m/s."; },
          [](const Guarded &g) {
            std::string s = "If " + format_condition(g.condition) + ": " + format_action(*g.then);
            if (g.otherwise) {
              s += " Else: " + format_action(**g.otherwise);
            }
            return s;
          },
      },
      action.kind);
}

std::vector<std::string> canonical_actions(const ActionPlan &plan) {
  std::vector<std::string> out;
  out.reserve(plan.actions.size() + plan.unparsed_lines.size());
  for (const auto &a : plan.actions) {
    out.push_back(format_action(a));
  }
  for (const auto &line : plan.unparsed_lines) {
    out.push_back(line);
  }
  return out;
}

std::vector<std::string> format_plan_lines(const ActionPlan &plan) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    out.push_back("Action " + std::to_string(i + 1) + ": " + format_action(plan.actions[i]));
  }
  return out;
}

bool plan_requires_confirmation(const ActionPlan &plan) {
  return std::count_if(plan.actions.begin(), plan.actions.end(), causes_motion) >= 2;
}

bool is_action_line(std::string_view line) {
  return std::regex_match(line.begin(), line.end(), action_line_regex());
}

std::optional<ActionPrimitive> parse_action_phrase(std::string_view phrase, bool decimal_comma,
                                                   std::vector<std::string> *annotations) {
  PhraseParser parser{decimal_comma, annotations};
  try {
    return parser.parse(phrase);
  } catch (const Error &e) {
    if (e.code() == ErrorCode::UnknownActionVerb) {
      return std::nullopt;
    }
    throw;
  }
}

ActionPlan parse_action_lines(const std::vector<std::string> &lines, const langid::LanguageTag &language,
                              Provenance provenance) {
  ActionPlan plan;
  plan.language = language;
  plan.provenance = provenance;
  const bool comma = uses_decimal_comma(language.code);
  long previous = 0;
  for (const auto &line : lines) {
    std::smatch m;
    if (!std::regex_match(line, m, action_line_regex())) {
      plan.unparsed_lines.push_back(line);
      continue;
    }
    const long k = std::stol(m[1].str());
    if ((previous == 0 && k != 1) || (previous != 0 && k <= previous)) {
      fail(ErrorCode::NonmonotoneNumbering,
           "action numbering must increase from 1; got " + std::to_string(k) + " after " + std::to_string(previous));
    }
    previous = k;
    auto action = parse_action_phrase(m[2].str(), comma, &plan.annotations);
    if (action) {
      plan.actions.push_back(std::move(*action));
    } else {
      plan.unparsed_lines.push_back(text::trim(line));
    }
  }
  plan.requires_confirmation = plan_requires_confirmation(plan);
  return plan;
}

} // namespace babelbot::engine
