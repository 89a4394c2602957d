#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace babelbot {

enum class Unit { None, Meter, MeterPerSecond, Degree, DegreePerSecond, Second };

std::string_view to_string(Unit unit);

/// A numeric literal found in text, normalized to SI-ish units (cm -> m, rad -> deg).
struct Quantity {
  double value = 0.0;
  Unit unit = Unit::None;
  std::size_t begin = 0; // byte offsets into the scanned text
  std::size_t end = 0;
  bool negative = false;
};

/// Finds every number (with optional attached unit) in textual order.
/// `decimal_comma` accepts "2,5" as 2.5; otherwise a comma always separates.
std::vector<Quantity> scan_quantities(std::string_view text, bool decimal_comma = false);

/// Whether a language writes decimals with a comma.
bool uses_decimal_comma(std::string_view language_code);

/// Compact decimal rendering: at most 6 fractional digits, trailing zeros dropped.
std::string format_number(double value);

} // namespace babelbot
