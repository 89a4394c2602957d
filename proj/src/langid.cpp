#include "babelbot/langid.hpp"

#include "babelbot/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

namespace babelbot::langid {

LanguageTag make_tag(std::string code, text::Script script) {
  return LanguageTag{std::move(code), script, 1.0};
}

namespace {

text::Script profile_script(const std::unordered_map<std::string, double> &freqs) {
  std::array<double, 6> weight{};
  for (const auto &[gram, f] : freqs) {
    for (char32_t cp : text::decode(gram)) {
      if (text::is_letter(cp)) {
        weight[static_cast<std::size_t>(text::script_of(cp))] += f;
      }
    }
  }
  const auto it = std::max_element(weight.begin(), weight.end());
  return static_cast<text::Script>(std::distance(weight.begin(), it));
}

} // namespace

LanguageProfile::LanguageProfile(std::string code, std::unordered_map<std::string, double> frequencies)
    : code_(text::to_lower(code)), frequencies_(std::move(frequencies)), script_(profile_script(frequencies_)) {
  // norm of the square-rooted frequency vector
  double sum = 0.0;
  for (const auto &[_, f] : frequencies_) {
    sum += f;
  }
  norm_ = std::sqrt(sum);
}

double LanguageProfile::frequency(const std::string &trigram) const {
  const auto it = frequencies_.find(trigram);
  return it == frequencies_.end() ? 0.0 : it->second;
}

void LanguageProfileSet::add(LanguageProfile profile) {
  profiles_.push_back(std::move(profile));
  std::sort(profiles_.begin(), profiles_.end(),
            [](const LanguageProfile &a, const LanguageProfile &b) { return a.code() < b.code(); });
}

const LanguageProfile *LanguageProfileSet::find(std::string_view code) const {
  for (const auto &p : profiles_) {
    if (p.code() == code) {
      return &p;
    }
  }
  return nullptr;
}

LanguageProfile load_profile(const std::filesystem::path &file) {
  std::ifstream in(file);
  if (!in) {
    fail(ErrorCode::IoError, "cannot open profile " + file.string());
  }
  std::unordered_map<std::string, double> freqs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      fail(ErrorCode::InvalidFormat, file.string() + ":" + std::to_string(lineno) + ": missing tab");
    }
    try {
      freqs[line.substr(0, tab)] = std::stod(line.substr(tab + 1));
    } catch (const std::exception &) {
      fail(ErrorCode::InvalidFormat, file.string() + ":" + std::to_string(lineno) + ": bad frequency");
    }
  }
  return LanguageProfile(file.stem().string(), std::move(freqs));
}

LanguageProfileSet LanguageProfileSet::load_directory(const std::filesystem::path &dir) {
  LanguageProfileSet set;
  std::vector<std::filesystem::path> files;
  for (const auto &entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".tsv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto &f : files) {
    set.add(load_profile(f));
  }
  return set;
}

void write_profile(const std::filesystem::path &file, const std::map<std::string, double> &frequencies,
                   std::size_t max_entries) {
  std::vector<std::pair<std::string, double>> entries(frequencies.begin(), frequencies.end());
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  if (entries.size() > max_entries) {
    entries.resize(max_entries);
  }
  double total = 0.0;
  for (const auto &e : entries) {
    total += e.second;
  }
  std::ofstream out(file);
  if (!out) {
    fail(ErrorCode::IoError, "cannot write profile " + file.string());
  }
  out.precision(8);
  for (const auto &[gram, f] : entries) {
    out << gram << '\t' << (f / total) << '\n';
  }
}

std::map<std::string, double> trigram_frequencies(std::string_view input) {
  const std::u32string cps = text::decode(input);
  std::vector<std::u32string> words;
  std::u32string current;
  for (char32_t cp : cps) {
    if (text::is_unsegmented(cp)) {
      // no word boundaries to pad: every ideograph stands alone
      if (!current.empty()) {
        words.push_back(std::move(current));
        current.clear();
      }
      words.emplace_back(1, cp);
    } else if (text::is_letter(cp)) {
      current.push_back(text::to_lower(cp));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) {
    words.push_back(std::move(current));
  }
  std::map<std::string, double> counts;
  double total = 0.0;
  for (const auto &w : words) {
    const std::u32string padded = U" " + w + U" ";
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
      counts[text::encode(std::u32string_view(padded).substr(i, 3))] += 1.0;
      total += 1.0;
    }
  }
  for (auto &[_, c] : counts) {
    c /= total;
  }
  return counts;
}

LanguageTag detect_language(std::string_view input, const LanguageProfileSet &profiles) {
  if (text::trim(input).empty()) {
    fail(ErrorCode::EmptyText, "cannot detect the language of empty text");
  }
  const auto grams = trigram_frequencies(input);
  const text::Script script = text::dominant_script(text::decode(input));
  // Cosine over square-rooted frequencies; with raw ones a handful of very
  // common trigrams decide short inputs.
  double text_norm = 0.0;
  for (const auto &[_, f] : grams) {
    text_norm += f;
  }
  text_norm = std::sqrt(text_norm);

  struct Scored {
    const LanguageProfile *profile;
    double score;
  };
  std::vector<Scored> scored;
  for (const auto &profile : profiles.profiles()) {
    if (script != text::Script::Other && profile.script() != script) {
      continue;
    }
    double dot = 0.0;
    for (const auto &[gram, f] : grams) {
      dot += std::sqrt(f * profile.frequency(gram));
    }
    const double denom = text_norm * profile.norm();
    scored.push_back({&profile, denom > 0.0 ? dot / denom : 0.0});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored &a, const Scored &b) {
    if (a.score != b.score) {
      return a.score > b.score;
    }
    if (a.profile->corpus_size() != b.profile->corpus_size()) {
      return a.profile->corpus_size() > b.profile->corpus_size();
    }
    return a.profile->code() < b.profile->code();
  });
  if (scored.empty() || scored.front().score < kMatchFloor) {
    fail(ErrorCode::NoProfileMatch, "no language profile scored above the match floor");
  }
  const double top = scored.front().score;
  const double second = scored.size() > 1 ? scored[1].score : 0.0;
  const double confidence = std::clamp((top - second) / top, 0.0, 1.0);
  return LanguageTag{scored.front().profile->code(), scored.front().profile->script(), confidence};
}

void SessionLanguageState::set_override(LanguageTag tag, std::int64_t timestamp_ms) {
  tag.confidence = 1.0;
  current = tag;
  source = LanguageSource::Override;
  history.emplace_back(timestamp_ms, std::move(tag));
}

void SessionLanguageState::clear_override() { source = LanguageSource::Detected; }

LanguageTag resolve_session_language(SessionLanguageState &state, const LanguageTag &detected,
                                     std::int64_t timestamp_ms) {
  if (state.source == LanguageSource::Override) {
    return state.current;
  }
  state.current = detected;
  state.history.emplace_back(timestamp_ms, detected);
  return detected;
}

namespace {

struct KnownLanguage {
  std::string_view code;
  std::string_view name;
  text::Script script;
};

constexpr std::array kKnown{
    KnownLanguage{"en", "English", text::Script::Latin},
    KnownLanguage{"de", "German", text::Script::Latin},
    KnownLanguage{"fr", "French", text::Script::Latin},
    KnownLanguage{"es", "Spanish", text::Script::Latin},
    KnownLanguage{"pt", "Portuguese", text::Script::Latin},
    KnownLanguage{"it", "Italian", text::Script::Latin},
    KnownLanguage{"sw", "Swahili", text::Script::Latin},
    KnownLanguage{"yo", "Yoruba", text::Script::Latin},
    KnownLanguage{"ig", "Igbo", text::Script::Latin},
    KnownLanguage{"ha", "Hausa", text::Script::Latin},
    KnownLanguage{"pcm", "Nigerian Pidgin", text::Script::Latin},
    KnownLanguage{"ht", "Haitian Creole", text::Script::Latin},
    KnownLanguage{"tpi", "Tok Pisin", text::Script::Latin},
    KnownLanguage{"ru", "Russian", text::Script::Cyrillic},
    KnownLanguage{"uk", "Ukrainian", text::Script::Cyrillic},
    KnownLanguage{"zh", "Chinese", text::Script::Han},
    KnownLanguage{"ar", "Arabic", text::Script::Arabic},
    KnownLanguage{"hi", "Hindi", text::Script::Devanagari},
};

} // namespace

std::string language_name(std::string_view code) {
  for (const auto &k : kKnown) {
    if (k.code == code) {
      return std::string(k.name);
    }
  }
  return std::string(code);
}

text::Script default_script(std::string_view code) {
  for (const auto &k : kKnown) {
    if (k.code == code) {
      return k.script;
    }
  }
  return text::Script::Other;
}

} // namespace babelbot::langid
