#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers shared by language detection, tokenization and template matching.
namespace babelbot::text {

enum class Script { Latin, Cyrillic, Han, Arabic, Devanagari, Other };

std::string_view to_string(Script script);
Script script_from_string(std::string_view name);

/// Decodes UTF-8; malformed bytes decode to U+FFFD.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view codepoints);
std::string encode(char32_t cp);

char32_t to_lower(char32_t cp);
std::string to_lower(std::string_view utf8);

bool is_letter(char32_t cp);
bool is_digit(char32_t cp);
bool is_space(char32_t cp);
/// Scripts written without spaces between words; tokenized per codepoint.
bool is_unsegmented(char32_t cp);

/// Script of a single letter; non-letters map to Other.
Script script_of(char32_t cp);
/// Majority script over the letters of `text`; Other when there are no letters.
Script dominant_script(std::u32string_view text);

std::string trim(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);

} // namespace babelbot::text
