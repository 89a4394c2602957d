#pragma once

#include "babelbot/text.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace babelbot::langid {

struct LanguageTag {
  std::string code; // lowercase ISO-639 code, e.g. "en", "pcm"
  text::Script script = text::Script::Latin;
  double confidence = 0.0;

  friend bool operator==(const LanguageTag &a, const LanguageTag &b) {
    return a.code == b.code && a.script == b.script;
  }
};

/// Builds a tag with confidence 1.0, as used for manual overrides and defaults.
LanguageTag make_tag(std::string code, text::Script script);

/// Character trigram profile for a single language.
class LanguageProfile {
public:
  LanguageProfile(std::string code, std::unordered_map<std::string, double> frequencies);

  [[nodiscard]] const std::string &code() const { return code_; }
  [[nodiscard]] text::Script script() const { return script_; }
  [[nodiscard]] std::size_t corpus_size() const { return frequencies_.size(); }
  /// Euclidean norm of the square-rooted frequencies.
  [[nodiscard]] double norm() const { return norm_; }
  [[nodiscard]] double frequency(const std::string &trigram) const;
  [[nodiscard]] const std::unordered_map<std::string, double> &frequencies() const { return frequencies_; }

private:
  std::string code_;
  std::unordered_map<std::string, double> frequencies_;
  text::Script script_;
  double norm_ = 0.0;
};

class LanguageProfileSet {
public:
  void add(LanguageProfile profile);
  /// Loads every `<code>.tsv` file (`trigram<TAB>relative_frequency` lines).
  static LanguageProfileSet load_directory(const std::filesystem::path &dir);

  [[nodiscard]] const std::vector<LanguageProfile> &profiles() const { return profiles_; }
  [[nodiscard]] const LanguageProfile *find(std::string_view code) const;
  [[nodiscard]] bool empty() const { return profiles_.empty(); }

private:
  std::vector<LanguageProfile> profiles_;
};

LanguageProfile load_profile(const std::filesystem::path &file);
void write_profile(const std::filesystem::path &file, const std::map<std::string, double> &frequencies,
                   std::size_t max_entries);

/// Relative trigram frequencies of lowercased, space-padded words; ideographs
/// and kana count as one-character words.
std::map<std::string, double> trigram_frequencies(std::string_view text);

inline constexpr double kMatchFloor = 0.05;

/// Highest cosine (over square-rooted frequencies) among those sharing the text's dominant script.
/// Throws EmptyText or NoProfileMatch.
LanguageTag detect_language(std::string_view text, const LanguageProfileSet &profiles);

enum class LanguageSource { Detected, Override };

struct SessionLanguageState {
  LanguageTag current;
  LanguageSource source = LanguageSource::Detected;
  std::vector<std::pair<std::int64_t, LanguageTag>> history;

  void set_override(LanguageTag tag, std::int64_t timestamp_ms);
  void clear_override();
};

LanguageTag resolve_session_language(SessionLanguageState &state, const LanguageTag &detected,
                                     std::int64_t timestamp_ms);

/// English display name for prompts ("de" -> "German"); falls back to the code.
std::string language_name(std::string_view code);
/// Default script for a code we ship data for.
text::Script default_script(std::string_view code);

} // namespace babelbot::langid
