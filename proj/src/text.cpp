#include "babelbot/text.hpp"

#include <array>
#include <map>

namespace babelbot::text {

std::string_view to_string(Script script) {
  switch (script) {
  case Script::Latin: return "Latin";
  case Script::Cyrillic: return "Cyrillic";
  case Script::Han: return "Han";
  case Script::Arabic: return "Arabic";
  case Script::Devanagari: return "Devanagari";
  case Script::Other: return "Other";
  }
  return "Other";
}

Script script_from_string(std::string_view name) {
  for (Script s : {Script::Latin, Script::Cyrillic, Script::Han, Script::Arabic, Script::Devanagari}) {
    if (to_string(s) == name) {
      return s;
    }
  }
  return Script::Other;
}

std::u32string decode(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  std::size_t i = 0;
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(utf8[k]); };
  while (i < utf8.size()) {
    const unsigned char b0 = byte(i);
    int extra = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      extra = 1;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      extra = 2;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      extra = 3;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      if (i + k >= utf8.size() || (byte(i + k) & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (byte(i + k) & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

std::string encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

std::string encode(std::u32string_view codepoints) {
  std::string out;
  out.reserve(codepoints.size());
  for (char32_t cp : codepoints) {
    out += encode(cp);
  }
  return out;
}

char32_t to_lower(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') {
    return cp + 32;
  }
  if (cp < 0x80) {
    return cp;
  }
  // Latin-1 supplement, excluding the multiplication sign.
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) {
    return cp + 32;
  }
  // Latin Extended-A: mostly even upper / odd lower pairs.
  if (cp >= 0x100 && cp <= 0x137) {
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  if (cp >= 0x139 && cp <= 0x148) {
    return (cp % 2 == 1) ? cp + 1 : cp;
  }
  if (cp >= 0x14A && cp <= 0x177) {
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  if (cp == 0x178) {
    return 0xFF;
  }
  if (cp >= 0x179 && cp <= 0x17E) {
    return (cp % 2 == 1) ? cp + 1 : cp;
  }
  // Latin Extended Additional (Vietnamese, Yoruba dot-below letters).
  if (cp >= 0x1E00 && cp <= 0x1EFF) {
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  // Greek.
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) {
    return cp + 32;
  }
  // Cyrillic.
  if (cp >= 0x410 && cp <= 0x42F) {
    return cp + 32;
  }
  if (cp >= 0x400 && cp <= 0x40F) {
    return cp + 80;
  }
  return cp;
}

std::string to_lower(std::string_view utf8) {
  std::u32string cps = decode(utf8);
  for (auto &cp : cps) {
    cp = to_lower(cp);
  }
  return encode(cps);
}

bool is_digit(char32_t cp) {
  return (cp >= U'0' && cp <= U'9') || (cp >= 0x660 && cp <= 0x669) || (cp >= 0x966 && cp <= 0x96F);
}

bool is_space(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == 0xA0 || cp == 0x3000 ||
         cp == 0x200B || cp == 0x202F;
}

bool is_unsegmented(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
         (cp >= 0x3040 && cp <= 0x30FF) || (cp >= 0xF900 && cp <= 0xFAFF) ||
         (cp >= 0xE00 && cp <= 0xE7F);
}

bool is_letter(char32_t cp) {
  if ((cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z')) {
    return true;
  }
  if (cp < 0xC0) {
    return false;
  }
  if (cp == 0xD7 || cp == 0xF7) {
    return false;
  }
  if (cp <= 0x24F) {
    return true; // Latin-1 letters, Extended-A/B
  }
  if (cp >= 0x250 && cp <= 0x2AF) {
    return true;
  }
  if (cp >= 0x300 && cp <= 0x36F) {
    return true; // combining marks stay attached to their word
  }
  if (cp >= 0x370 && cp <= 0x3FF) {
    return cp != 0x37E && cp != 0x387;
  }
  if (cp >= 0x400 && cp <= 0x52F) {
    return true;
  }
  if (cp >= 0x600 && cp <= 0x6FF) {
    return cp != 0x60C && cp != 0x61B && cp != 0x61F && cp != 0x66A && !(cp >= 0x660 && cp <= 0x669) &&
           cp != 0x6D4;
  }
  if (cp >= 0x900 && cp <= 0x97F) {
    return cp != 0x964 && cp != 0x965 && !(cp >= 0x966 && cp <= 0x96F);
  }
  if (cp >= 0x1E00 && cp <= 0x1EFF) {
    return true;
  }
  if (cp >= 0xAC00 && cp <= 0xD7AF) {
    return true;
  }
  return is_unsegmented(cp);
}

Script script_of(char32_t cp) {
  if (!is_letter(cp)) {
    return Script::Other;
  }
  if (cp <= 0x36F || (cp >= 0x1E00 && cp <= 0x1EFF)) {
    return Script::Latin;
  }
  if (cp >= 0x400 && cp <= 0x52F) {
    return Script::Cyrillic;
  }
  if (cp >= 0x600 && cp <= 0x6FF) {
    return Script::Arabic;
  }
  if (cp >= 0x900 && cp <= 0x97F) {
    return Script::Devanagari;
  }
  if ((cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) || (cp >= 0xF900 && cp <= 0xFAFF)) {
    return Script::Han;
  }
  return Script::Other;
}

Script dominant_script(std::u32string_view text) {
  std::array<std::size_t, 6> counts{};
  std::size_t letters = 0;
  for (char32_t cp : text) {
    if (!is_letter(cp) || (cp >= 0x300 && cp <= 0x36F)) {
      continue;
    }
    ++letters;
    ++counts[static_cast<std::size_t>(script_of(cp))];
  }
  if (letters == 0) {
    return Script::Other;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (counts[i] > counts[best]) {
      best = i;
    }
  }
  return static_cast<Script>(best);
}

std::string trim(std::string_view s) {
  const auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_ws(s[b])) {
    ++b;
  }
  while (e > b && is_ws(s[e - 1])) {
    --e;
  }
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto nl = s.find('\n', start);
    std::string_view line = s.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    lines.emplace_back(line);
    if (nl == std::string_view::npos) {
      break;
    }
    start = nl + 1;
  }
  return lines;
}

} // namespace babelbot::text
