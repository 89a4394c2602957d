#include "babelbot/metrics.hpp"

#include "babelbot/error.hpp"
#include "babelbot/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace babelbot::metrics {

// ---------------------------------------------------------------------------
// Tokenizer

namespace {

bool is_punct(char32_t cp) {
  if (cp < 0x80) {
    return !(std::isalnum(static_cast<int>(cp)) != 0) && !text::is_space(cp);
  }
  return (cp >= 0xA1 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7 || (cp >= 0x2000 && cp <= 0x206F) ||
         (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
         (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65) || cp == 0x060C || cp == 0x061B ||
         cp == 0x061F || cp == 0x06D4 || cp == 0x0964 || cp == 0x0965;
}

bool ascii_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

} // namespace

std::vector<std::string> tokenize(std::string_view utf8, std::string_view language) {
  const std::u32string s = text::decode(utf8);
  const char32_t decimal = uses_decimal_comma(language) ? U',' : U'.';
  std::vector<std::string> out;
  std::u32string cur;
  const auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(text::encode(cur));
      cur.clear();
    }
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char32_t c = s[i];
    const char32_t prev = i > 0 ? s[i - 1] : 0;
    const char32_t next = i + 1 < s.size() ? s[i + 1] : 0;
    if (text::is_space(c)) {
      flush();
    } else if (text::is_unsegmented(c)) {
      flush();
      out.push_back(text::encode(c));
    } else if (is_punct(c)) {
      const bool in_number = c == decimal && ascii_digit(prev) && ascii_digit(next) && !cur.empty();
      const bool in_word = (c == U'\'' || c == U'-' || c == 0x2019) && !cur.empty() && next != 0 &&
                           !text::is_space(next) && !is_punct(next) && !text::is_unsegmented(next);
      if (in_number || in_word) {
        cur += c;
      } else {
        flush();
        out.push_back(text::encode(c));
      }
    } else {
      cur += c;
    }
  }
  flush();
  return out;
}

// ---------------------------------------------------------------------------
// Parameters

std::vector<Param> extract_params(std::string_view action) {
  std::vector<Param> out;
  for (const auto &q : scan_quantities(action, false)) {
    out.push_back({q.value, q.unit});
  }
  return out;
}

std::vector<Param> extract_params(const std::vector<std::string> &actions) {
  std::vector<Param> out;
  for (const auto &a : actions) {
    auto p = extract_params(a);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

double per(const std::vector<Param> &ref, const std::vector<Param> &hyp) {
  if (ref.empty() && hyp.empty()) {
    return 0.0;
  }
  if (ref.empty() || hyp.empty()) {
    return 1.0;
  }
  const std::size_t k = std::min(ref.size(), hyp.size());
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const bool same = ref[i].unit == hyp[i].unit && std::abs(ref[i].value - hyp[i].value) <= kParamTolerance;
    mismatches += same ? 0 : 1;
  }
  return static_cast<double>(mismatches) / static_cast<double>(k);
}

double per(const std::vector<std::string> &ref_actions, const std::vector<std::string> &hyp_actions) {
  return per(extract_params(ref_actions), extract_params(hyp_actions));
}

double s_per(const std::vector<Param> &ref, const std::vector<Param> &hyp) {
  const double gap = std::abs(static_cast<double>(hyp.size()) - static_cast<double>(ref.size()));
  const double penalty = std::min(1.0, gap / std::max(1.0, static_cast<double>(ref.size())));
  return std::min(1.0 - per(ref, hyp), 1.0 - penalty);
}

double s_per(const std::vector<std::string> &ref_actions, const std::vector<std::string> &hyp_actions) {
  return s_per(extract_params(ref_actions), extract_params(hyp_actions));
}

// ---------------------------------------------------------------------------
// Semantic score

namespace {

std::map<std::string, int> token_bag(const std::vector<std::string> &actions) {
  std::map<std::string, int> bag;
  for (const auto &a : actions) {
    for (const auto &t : tokenize(text::to_lower(a), "en")) {
      ++bag[t];
    }
  }
  return bag;
}

} // namespace

double TokenF1Scorer::score(const std::vector<std::string> &ref_actions,
                            const std::vector<std::string> &hyp_actions) const {
  const auto r = token_bag(ref_actions), h = token_bag(hyp_actions);
  if (r.empty() && h.empty()) {
    return 1.0;
  }
  int nr = 0, nh = 0, common = 0;
  for (const auto &[t, c] : r) {
    nr += c;
    if (const auto it = h.find(t); it != h.end()) {
      common += std::min(c, it->second);
    }
  }
  for (const auto &[t, c] : h) {
    nh += c;
  }
  if (common == 0) {
    return 0.0;
  }
  const double precision = static_cast<double>(common) / nh;
  const double recall = static_cast<double>(common) / nr;
  return 2 * precision * recall / (precision + recall);
}

double semantic_score(const std::vector<std::string> &ref_actions, const std::vector<std::string> &hyp_actions,
                      const SemanticScorer &scorer) {
  return scorer.score(ref_actions, hyp_actions);
}

// ---------------------------------------------------------------------------
// Records

nlohmann::json to_json(const InteractionRecord &r) {
  return {{"lang", r.lang},
          {"text", r.text},
          {"t_ins_ms", r.t_ins_ms},
          {"t_res_ms", r.t_res_ms},
          {"gold_actions", r.gold_actions},
          {"pred_actions", r.pred_actions},
          {"success", r.success}};
}

InteractionRecord record_from_json(const nlohmann::json &j) {
  InteractionRecord r;
  try {
    r.lang = j.at("lang").get<std::string>();
    r.text = j.at("text").get<std::string>();
    r.t_ins_ms = j.at("t_ins_ms").get<std::int64_t>();
    r.t_res_ms = j.at("t_res_ms").get<std::int64_t>();
    r.gold_actions = j.at("gold_actions").get<std::vector<std::string>>();
    r.pred_actions = j.at("pred_actions").get<std::vector<std::string>>();
    r.success = j.at("success").get<int>();
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorCode::InvalidFormat, std::string("interaction record: ") + e.what());
  }
  if (r.t_res_ms < r.t_ins_ms) {
    fail(ErrorCode::InvalidFormat, "interaction record has t_res before t_ins");
  }
  if (r.success != 0 && r.success != 1) {
    fail(ErrorCode::InvalidFormat, "interaction record success must be 0 or 1");
  }
  return r;
}

// ---------------------------------------------------------------------------
// Aggregates

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) {
      s += v;
    }
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double mean(std::span<const double> values) {
  if (values.empty()) {
    fail(ErrorCode::EmptyDataset, "mean of an empty set");
  }
  return pairwise_sum(values) / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
  if (values.size() < 2) {
    return 0.0;
  }
  const double m = mean(values);
  std::vector<double> sq;
  sq.reserve(values.size());
  for (double v : values) {
    sq.push_back((v - m) * (v - m));
  }
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(values.size()));
}

double composite_score(double semantic, double parameter, const IpaWeights &w) {
  return w.w1 * semantic + w.w2 * parameter;
}

bool parsed_correctly(double semantic, double parameter, const IpaWeights &w) {
  return composite_score(semantic, parameter, w) >= w.gamma;
}

IpaResult ipa(std::span<const InteractionRecord> records, const SemanticScorer &scorer, const IpaWeights &w) {
  if (records.empty()) {
    fail(ErrorCode::EmptyDataset, "IPA needs at least one record");
  }
  IpaResult out;
  std::vector<double> hits;
  for (const auto &r : records) {
    double sem = 0.0;
    try {
      sem = scorer.score(r.gold_actions, r.pred_actions);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::ScorerUnavailable) {
        throw;
      }
      ++out.excluded;
      continue;
    }
    const bool ok = parsed_correctly(sem, s_per(r.gold_actions, r.pred_actions), w);
    out.correct += ok ? 1 : 0;
    hits.push_back(ok ? 1.0 : 0.0);
  }
  out.evaluated = hits.size();
  if (hits.empty()) {
    fail(ErrorCode::EmptyDataset, "every record was excluded from IPA");
  }
  out.value = mean(hits);
  return out;
}

double tsr(std::span<const InteractionRecord> records) {
  if (records.empty()) {
    fail(ErrorCode::EmptyDataset, "TSR needs at least one record");
  }
  std::vector<double> s;
  for (const auto &r : records) {
    s.push_back(r.success);
  }
  return mean(s);
}

double art(std::span<const InteractionRecord> records) {
  if (records.empty()) {
    fail(ErrorCode::EmptyDataset, "ART needs at least one record");
  }
  std::vector<double> gaps;
  for (const auto &r : records) {
    gaps.push_back(static_cast<double>(r.t_res_ms - r.t_ins_ms) / 1000.0);
  }
  return mean(gaps);
}

// ---------------------------------------------------------------------------
// Translation QC

double bleu(const std::vector<std::string> &ref, const std::vector<std::string> &hyp, std::span<const double> weights,
            int max_n) {
  if (ref.empty() || hyp.empty()) {
    fail(ErrorCode::EmptyInput, "BLEU needs a non-empty reference and hypothesis");
  }
  std::vector<double> uniform;
  if (weights.empty()) {
    uniform.assign(static_cast<std::size_t>(max_n), 1.0 / max_n);
    weights = uniform;
  }
  const auto grams = [](const std::vector<std::string> &toks, int n) {
    std::map<std::vector<std::string>, int> counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i) {
      ++counts[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                        toks.begin() + static_cast<std::ptrdiff_t>(i) + n)];
    }
    return counts;
  };
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto h = grams(hyp, n), r = grams(ref, n);
    int clipped = 0, total = 0;
    for (const auto &[g, c] : h) {
      total += c;
      if (const auto it = r.find(g); it != r.end()) {
        clipped += std::min(c, it->second);
      }
    }
    const double p = static_cast<double>(clipped) / std::max(1, total);
    log_sum += weights[static_cast<std::size_t>(n - 1)] * std::log(std::max(p, kBleuFloor));
  }
  const double bp =
      std::min(1.0, std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(hyp.size())));
  return bp * std::exp(log_sum);
}

int levenshtein(const std::vector<std::string> &a, const std::vector<std::string> &b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) {
    prev[j] = static_cast<int>(j);
  }
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

TerResult ter(const std::vector<std::string> &ref, const std::vector<std::string> &hyp, int max_shifts) {
  if (ref.empty()) {
    fail(ErrorCode::EmptyReference, "TER needs a non-empty reference");
  }
  std::vector<std::string> cur = hyp;
  int dist = levenshtein(ref, cur);
  TerResult out;
  while (out.shifts < max_shifts && dist > 0) {
    int best = dist;
    std::size_t best_len = 0;
    std::vector<std::string> best_seq;
    const std::size_t n = cur.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t len = 1; i + len <= n; ++len) {
        std::vector<std::string> rest(cur.begin(), cur.begin() + static_cast<std::ptrdiff_t>(i));
        rest.insert(rest.end(), cur.begin() + static_cast<std::ptrdiff_t>(i + len), cur.end());
        for (std::size_t j = 0; j <= rest.size(); ++j) {
          if (j == i) {
            continue;
          }
          std::vector<std::string> cand(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(j));
          cand.insert(cand.end(), cur.begin() + static_cast<std::ptrdiff_t>(i),
                      cur.begin() + static_cast<std::ptrdiff_t>(i + len));
          cand.insert(cand.end(), rest.begin() + static_cast<std::ptrdiff_t>(j), rest.end());
          const int d = levenshtein(ref, cand);
          // ties go to the longer block
          if (d < dist && (d < best || (d == best && len > best_len))) {
            best = d;
            best_len = len;
            best_seq = std::move(cand);
          }
        }
      }
    }
    if (best_seq.empty()) {
      break;
    }
    cur = std::move(best_seq);
    dist = best;
    ++out.shifts;
  }
  out.edit_distance = dist;
  out.score = static_cast<double>(out.shifts + dist) / static_cast<double>(ref.size());
  return out;
}

int vematch(const std::vector<std::string> &ref, const std::vector<std::string> &hyp) {
  if (ref.empty() || hyp.empty()) {
    fail(ErrorCode::EmptyInput, "VeMatch needs non-empty token lists");
  }
  return text::to_lower(ref.front()) == text::to_lower(hyp.front()) ? 1 : 0;
}

std::vector<TranslationRecord> load_translations(const std::filesystem::path &file) {
  std::ifstream in(file);
  if (!in) {
    fail(ErrorCode::IoError, "cannot read " + file.string());
  }
  std::vector<TranslationRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) {
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(line);
      TranslationRecord r{j.at("source").get<std::string>(), j.at("lang").get<std::string>(),
                          j.at("hyp").get<std::string>(), j.at("ref").get<std::string>()};
      if (r.source.empty() || r.lang.empty() || r.hyp.empty() || r.ref.empty()) {
        fail(ErrorCode::InvalidFormat, "empty field");
      }
      out.push_back(std::move(r));
    } catch (const std::exception &e) {
      fail(ErrorCode::InvalidFormat, file.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

} // namespace

std::vector<TranslationRow> translation_qc(std::span<const TranslationRecord> records) {
  if (records.empty()) {
    fail(ErrorCode::EmptyDataset, "no translation records");
  }
  struct Acc {
    std::vector<double> bleu, ter, per, ve;
  };
  std::map<std::string, Acc> by_lang;
  Acc all;
  for (const auto &r : records) {
    const auto ref = tokenize(r.ref, "en");
    const auto hyp = tokenize(r.hyp, "en");
    const double values[] = {bleu(ref, hyp), ter(ref, hyp).score, per(extract_params(r.ref), extract_params(r.hyp)),
                             static_cast<double>(vematch(ref, hyp))};
    for (Acc *a : {&by_lang[r.lang], &all}) {
      a->bleu.push_back(values[0]);
      a->ter.push_back(values[1]);
      a->per.push_back(values[2]);
      a->ve.push_back(values[3]);
    }
  }
  std::vector<TranslationRow> rows;
  const auto row = [](const std::string &lang, const Acc &a) {
    return TranslationRow{lang, a.bleu.size(), mean(a.bleu), mean(a.ter), mean(a.per), mean(a.ve)};
  };
  for (const auto &[lang, a] : by_lang) {
    rows.push_back(row(lang, a));
  }
  rows.push_back(row("all", all));
  return rows;
}

std::string translation_csv(const std::vector<TranslationRow> &rows) {
  std::string out = "lang,n,bleu,ter,per,vematch\n";
  for (const auto &r : rows) {
    out += r.lang + "," + std::to_string(r.n) + "," + fixed6(r.bleu) + "," + fixed6(r.ter) + "," + fixed6(r.per) +
           "," + fixed6(r.vematch) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

std::string language_family(std::string_view code) {
  static const std::map<std::string, std::string, std::less<>> families = {
      {"ar", "Afro-Asiatic"},  {"de", "Indo-European"}, {"en", "Indo-European"}, {"es", "Indo-European"},
      {"fr", "Indo-European"}, {"hi", "Indo-European"}, {"ru", "Indo-European"}, {"sw", "Niger-Congo"},
      {"pcm", "Creole"},       {"zh", "Sino-Tibetan"},  {"it", "Indo-European"}, {"pt", "Indo-European"},
      {"ja", "Japonic"},       {"ko", "Koreanic"},      {"tr", "Turkic"},        {"yo", "Niger-Congo"},
  };
  const auto it = families.find(code);
  return it == families.end() ? "other" : it->second;
}

MetricsReport build_report(std::span<const InteractionRecord> records, const SemanticScorer &scorer,
                           const IpaWeights &w) {
  if (records.empty()) {
    fail(ErrorCode::EmptyDataset, "report needs at least one record");
  }
  std::map<std::string, std::vector<InteractionRecord>> by_lang;
  for (const auto &r : records) {
    by_lang[r.lang].push_back(r);
  }
  MetricsReport report;
  std::vector<double> ipas, tsrs, arts;
  for (const auto &[lang, recs] : by_lang) {
    const auto i = ipa(recs, scorer, w);
    report.excluded += i.excluded;
    LanguageRow row{lang, language_family(lang), recs.size(), i.value, tsr(recs), art(recs)};
    ipas.push_back(row.ipa);
    tsrs.push_back(row.tsr);
    arts.push_back(row.art_s);
    report.rows.push_back(std::move(row));
  }
  report.overall = {"all", "-", records.size(), ipa(records, scorer, w).value, tsr(records), art(records)};
  report.ipa_std = stddev(ipas);
  report.tsr_std = stddev(tsrs);
  report.art_std = stddev(arts);
  return report;
}

std::string to_csv(const MetricsReport &report) {
  std::string out = "lang,family,n,ipa,tsr,art_s\n";
  const auto line = [&](const LanguageRow &r) {
    out += r.lang + "," + r.family + "," + std::to_string(r.n) + "," + fixed6(r.ipa) + "," + fixed6(r.tsr) + "," +
           fixed6(r.art_s) + "\n";
  };
  for (const auto &r : report.rows) {
    line(r);
  }
  line(report.overall);
  return out;
}

nlohmann::json to_json(const MetricsReport &report) {
  const auto row = [](const LanguageRow &r) {
    return nlohmann::json{{"lang", r.lang}, {"family", r.family}, {"n", r.n},
                          {"ipa", r.ipa},   {"tsr", r.tsr},       {"art_s", r.art_s}};
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto &r : report.rows) {
    rows.push_back(row(r));
  }
  return {{"rows", rows},
          {"overall", row(report.overall)},
          {"std", {{"ipa", report.ipa_std}, {"tsr", report.tsr_std}, {"art_s", report.art_std}}},
          {"excluded", report.excluded}};
}

std::vector<InteractionRecord> parse_interactions(std::string_view content, ReplayStats *stats) {
  ReplayStats local;
  ReplayStats &st = stats != nullptr ? *stats : local;
  st = {};
  std::vector<InteractionRecord> out;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    const bool terminated = nl != std::string_view::npos;
    const std::string_view line = content.substr(pos, terminated ? nl - pos : std::string_view::npos);
    pos = terminated ? nl + 1 : content.size();
    const bool last = pos >= content.size();
    if (text::trim(line).empty()) {
      continue;
    }
    ++st.lines;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      if (last) {
        st.torn_tail = true;
        break;
      }
      fail(ErrorCode::InvalidFormat, "log line " + std::to_string(st.lines) + ": " + e.what());
    }
    if (last && !terminated) {
      // parsable but never finished: the writer died before the newline
      st.torn_tail = true;
      break;
    }
    if (j.contains("type") && j["type"] != "interaction") {
      ++st.skipped;
      continue;
    }
    out.push_back(record_from_json(j));
    ++st.records;
  }
  return out;
}

std::vector<InteractionRecord> load_interactions(const std::filesystem::path &file, ReplayStats *stats) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    fail(ErrorCode::IoError, "cannot read " + file.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_interactions(ss.str(), stats);
}

} // namespace babelbot::metrics
