#pragma once

#include "babelbot/quantity.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace babelbot::metrics {

// ---------------------------------------------------------------------------
// Text

/// Rule-based tokenizer: words split on whitespace, punctuation detached,
/// numbers kept whole (decimal point, or comma where the language uses one),
/// one token per codepoint for unsegmented scripts.
std::vector<std::string> tokenize(std::string_view text, std::string_view language = "en");

// ---------------------------------------------------------------------------
// Parameters

struct Param {
  double value = 0.0;
  Unit unit = Unit::None;
  friend bool operator==(const Param &, const Param &) = default;
};

/// Numeric literals with units in textual order, normalized (cm -> m, rad -> deg).
std::vector<Param> extract_params(std::string_view action);
/// Concatenation over a list of canonical action strings.
std::vector<Param> extract_params(const std::vector<std::string> &actions);

inline constexpr double kParamTolerance = 1e-6;

/// Parameter error rate over extracted lists. k = min(|ref|, |hyp|) mismatch
/// fraction when both are non-empty; 1 when exactly one side is empty; 0 when both are.
double per(const std::vector<Param> &ref, const std::vector<Param> &hyp);
double per(const std::vector<std::string> &ref_actions, const std::vector<std::string> &hyp_actions);

/// min(1 - PER, 1 - min(1, |count gap| / max(1, |ref|))).
double s_per(const std::vector<Param> &ref, const std::vector<Param> &hyp);
double s_per(const std::vector<std::string> &ref_actions, const std::vector<std::string> &hyp_actions);

// ---------------------------------------------------------------------------
// Semantic score

class SemanticScorer {
public:
  virtual ~SemanticScorer() = default;
  /// Throws ScorerUnavailable when the scorer cannot be reached.
  [[nodiscard]] virtual double score(const std::vector<std::string> &ref_actions,
                                     const std::vector<std::string> &hyp_actions) const = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

/// F1 over bags of lowercased tokens of the joined action strings. Two empty
/// lists score 1.
class TokenF1Scorer final : public SemanticScorer {
public:
  [[nodiscard]] double score(const std::vector<std::string> &ref_actions,
                             const std::vector<std::string> &hyp_actions) const override;
  [[nodiscard]] std::string name() const override { return "token-f1"; }
};

double semantic_score(const std::vector<std::string> &ref_actions, const std::vector<std::string> &hyp_actions,
                      const SemanticScorer &scorer);

// ---------------------------------------------------------------------------
// Interaction metrics

struct InteractionRecord {
  std::string text;
  std::string lang;
  std::int64_t t_ins_ms = 0;
  std::int64_t t_res_ms = 0;
  std::vector<std::string> gold_actions;
  std::vector<std::string> pred_actions;
  int success = 0;
};

nlohmann::json to_json(const InteractionRecord &r);
/// Throws InvalidFormat when a field is missing or violates t_res >= t_ins, success in {0, 1}.
InteractionRecord record_from_json(const nlohmann::json &j);

struct IpaWeights {
  double gamma = 0.9;
  double w1 = 0.4; // semantic
  double w2 = 0.6; // parameter
};

double composite_score(double semantic, double parameter, const IpaWeights &w = {});
bool parsed_correctly(double semantic, double parameter, const IpaWeights &w = {});

struct IpaResult {
  double value = 0.0;
  std::size_t correct = 0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0; // scorer unavailable
};

/// Mean of the correctness indicator. Throws EmptyDataset.
IpaResult ipa(std::span<const InteractionRecord> records, const SemanticScorer &scorer, const IpaWeights &w = {});
/// Mean of s_n. Throws EmptyDataset.
double tsr(std::span<const InteractionRecord> records);
/// Mean response latency in seconds. Throws EmptyDataset.
double art(std::span<const InteractionRecord> records);

/// Pairwise (cascade) summation, deterministic for a given order.
double pairwise_sum(std::span<const double> values);
double mean(std::span<const double> values);
/// Population standard deviation; 0 for fewer than two values.
double stddev(std::span<const double> values);

// ---------------------------------------------------------------------------
// Translation QC

inline constexpr double kBleuFloor = 1e-9;

/// Sentence BLEU with clipped counts, precisions floored at 1e-9 and brevity
/// penalty min(1, exp(1 - |ref| / |hyp|)). Throws EmptyInput.
double bleu(const std::vector<std::string> &ref, const std::vector<std::string> &hyp,
            std::span<const double> weights = {}, int max_n = 4);

struct TerResult {
  double score = 0.0;
  int shifts = 0;
  int edit_distance = 0;
};

/// Greedy block shifts (best strict Levenshtein improvement, longer block on ties,
/// at most 10), then
/// Levenshtein; (shifts + distance) / |ref|. Throws EmptyReference.
TerResult ter(const std::vector<std::string> &ref, const std::vector<std::string> &hyp, int max_shifts = 10);

int levenshtein(const std::vector<std::string> &a, const std::vector<std::string> &b);

/// 1 when the casefolded first tokens agree. Throws EmptyInput.
int vematch(const std::vector<std::string> &ref, const std::vector<std::string> &hyp);

struct TranslationRecord {
  std::string source;
  std::string lang;
  std::string hyp;
  std::string ref;
};

/// JSONL with source, lang, hyp, ref. Throws IoError / InvalidFormat.
std::vector<TranslationRecord> load_translations(const std::filesystem::path &file);

struct TranslationRow {
  std::string lang;
  std::size_t n = 0;
  double bleu = 0.0;
  double ter = 0.0;
  double per = 0.0;
  double vematch = 0.0;
};

/// Per-language means, sorted by language code, plus an "all" row last.
/// Tokens come from `tokenize` with the English rules (the target language).
std::vector<TranslationRow> translation_qc(std::span<const TranslationRecord> records);
std::string translation_csv(const std::vector<TranslationRow> &rows);

// ---------------------------------------------------------------------------
// Reports

/// Language family used in report rows; "other" when unknown.
std::string language_family(std::string_view code);

struct LanguageRow {
  std::string lang;
  std::string family;
  std::size_t n = 0;
  double ipa = 0.0;
  double tsr = 0.0;
  double art_s = 0.0;
};

struct MetricsReport {
  std::vector<LanguageRow> rows; // sorted by language code
  LanguageRow overall;           // lang "all"
  double ipa_std = 0.0;          // spread of the per-language values
  double tsr_std = 0.0;
  double art_std = 0.0;
  std::size_t excluded = 0;
};

MetricsReport build_report(std::span<const InteractionRecord> records, const SemanticScorer &scorer,
                           const IpaWeights &w = {});
/// lang,family,n,ipa,tsr,art_s with six decimals; the overall row comes last.
std::string to_csv(const MetricsReport &report);
nlohmann::json to_json(const MetricsReport &report);

struct ReplayStats {
  std::size_t lines = 0;
  std::size_t records = 0;
  std::size_t skipped = 0;  // other event types
  bool torn_tail = false;   // unterminated or unparsable final line dropped
};

/// Interaction records from a JSONL log. Lines carrying a "type" other than
/// "interaction" are skipped. A damaged final line is dropped and reported;
/// damage anywhere else throws InvalidFormat.
std::vector<InteractionRecord> load_interactions(const std::filesystem::path &file, ReplayStats *stats = nullptr);
std::vector<InteractionRecord> parse_interactions(std::string_view content, ReplayStats *stats = nullptr);

} // namespace babelbot::metrics
