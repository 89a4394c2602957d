#include "babelbot/quantity.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace babelbot {

std::string_view to_string(Unit unit) {
  switch (unit) {
  case Unit::None: return "";
  case Unit::Meter: return "m";
  case Unit::MeterPerSecond: return "m/s";
  case Unit::Degree: return "deg";
  case Unit::DegreePerSecond: return "deg/s";
  case Unit::Second: return "s";
  }
  return "";
}

namespace {

struct UnitSpelling {
  std::string_view text;
  Unit unit;
  double scale;
};

// Longest spellings first so "m/s" wins over "m" and "degrees" over "deg".
constexpr std::array kUnits{
    UnitSpelling{"meters per second", Unit::MeterPerSecond, 1.0},
    UnitSpelling{"metres per second", Unit::MeterPerSecond, 1.0},
    UnitSpelling{"meter per second", Unit::MeterPerSecond, 1.0},
    UnitSpelling{"degrees per second", Unit::DegreePerSecond, 1.0},
    UnitSpelling{"degree per second", Unit::DegreePerSecond, 1.0},
    UnitSpelling{"centimeters", Unit::Meter, 0.01},
    UnitSpelling{"centimetres", Unit::Meter, 0.01},
    UnitSpelling{"centimeter", Unit::Meter, 0.01},
    UnitSpelling{"centimetre", Unit::Meter, 0.01},
    UnitSpelling{"degrees", Unit::Degree, 1.0},
    UnitSpelling{"seconds", Unit::Second, 1.0},
    UnitSpelling{"radians", Unit::Degree, 180.0 / std::numbers::pi},
    UnitSpelling{"meters", Unit::Meter, 1.0},
    UnitSpelling{"metres", Unit::Meter, 1.0},
    UnitSpelling{"degree", Unit::Degree, 1.0},
    UnitSpelling{"second", Unit::Second, 1.0},
    UnitSpelling{"radian", Unit::Degree, 180.0 / std::numbers::pi},
    UnitSpelling{"meter", Unit::Meter, 1.0},
    UnitSpelling{"metre", Unit::Meter, 1.0},
    UnitSpelling{"deg/s", Unit::DegreePerSecond, 1.0},
    UnitSpelling{"rad/s", Unit::DegreePerSecond, 180.0 / std::numbers::pi},
    UnitSpelling{"\xC2\xB0/s", Unit::DegreePerSecond, 1.0},
    UnitSpelling{"secs", Unit::Second, 1.0},
    UnitSpelling{"m/s", Unit::MeterPerSecond, 1.0},
    UnitSpelling{"deg", Unit::Degree, 1.0},
    UnitSpelling{"rad", Unit::Degree, 180.0 / std::numbers::pi},
    UnitSpelling{"sec", Unit::Second, 1.0},
    UnitSpelling{"cm", Unit::Meter, 0.01},
    UnitSpelling{"\xC2\xB0", Unit::Degree, 1.0},
    UnitSpelling{"%", Unit::None, 0.01},
    UnitSpelling{"m", Unit::Meter, 1.0},
    UnitSpelling{"s", Unit::Second, 1.0},
};

bool is_ascii_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

bool iequal_prefix(std::string_view text, std::size_t pos, std::string_view word) {
  if (pos + word.size() > text.size()) {
    return false;
  }
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[pos + i])) != static_cast<unsigned char>(word[i])) {
      return false;
    }
  }
  return true;
}

} // namespace

std::vector<Quantity> scan_quantities(std::string_view text, bool decimal_comma) {
  std::vector<Quantity> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_ascii_digit(text[i])) {
      ++i;
      continue;
    }
    // Digits glued to a word ("x2", "L2") are not quantities.
    if (i > 0 && (is_ascii_alpha(text[i - 1]) || text[i - 1] == '_')) {
      while (i < text.size() && is_ascii_digit(text[i])) {
        ++i;
      }
      continue;
    }
    Quantity q;
    q.begin = i;
    if (i > 0 && text[i - 1] == '-' && (i < 2 || !is_ascii_alpha(text[i - 2]))) {
      q.negative = true;
      q.begin = i - 1;
    }
    std::string digits;
    while (i < text.size() && is_ascii_digit(text[i])) {
      digits.push_back(text[i++]);
    }
    if (i + 1 < text.size() && (text[i] == '.' || (decimal_comma && text[i] == ',')) && is_ascii_digit(text[i + 1])) {
      digits.push_back('.');
      ++i;
      while (i < text.size() && is_ascii_digit(text[i])) {
        digits.push_back(text[i++]);
      }
    }
    q.value = std::stod(digits);
    if (q.negative) {
      q.value = -q.value;
    }
    q.end = i;
    std::size_t j = i;
    while (j < text.size() && text[j] == ' ') {
      ++j;
    }
    for (const auto &spelling : kUnits) {
      if (!iequal_prefix(text, j, spelling.text)) {
        continue;
      }
      const std::size_t after = j + spelling.text.size();
      // Alphabetic units must end at a word boundary ("m" must not eat "meter" prefixes of other words).
      if (is_ascii_alpha(spelling.text.back()) && after < text.size() && is_ascii_alpha(text[after])) {
        continue;
      }
      q.unit = spelling.unit;
      q.value *= spelling.scale;
      q.end = after;
      break;
    }
    out.push_back(q);
    i = q.end;
  }
  return out;
}

bool uses_decimal_comma(std::string_view code) {
  static constexpr std::array kCommaLocales{"de", "fr", "es", "pt", "it", "ru", "uk", "pl", "nl", "tr", "sw", "ht", "id", "vi"};
  for (std::string_view c : kCommaLocales) {
    if (c == code) {
      return true;
    }
  }
  return false;
}

std::string format_number(double value) {
  if (std::fabs(value) < 5e-7) {
    return "0";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  std::string s(buf);
  while (!s.empty() && s.back() == '0') {
    s.pop_back();
  }
  if (!s.empty() && s.back() == '.') {
    s.pop_back();
  }
  return s;
}

} // namespace babelbot
