#include "babelbot/engine.hpp"

#include "babelbot/error.hpp"
#include "babelbot/quantity.hpp"
#include "babelbot/text.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

namespace babelbot::engine {

using nlohmann::json;

Interpretation split_reply(std::string raw_reply) {
  Interpretation out;
  std::vector<std::string> prose;
  for (const auto &line : text::split_lines(raw_reply)) {
    if (is_action_line(line)) {
      out.plan_lines.push_back(text::trim(line));
    } else if (const auto t = text::trim(line); !t.empty()) {
      prose.push_back(t);
    }
  }
  for (std::size_t i = 0; i < prose.size(); ++i) {
    out.summary += (i ? "\n" : "") + prose[i];
  }
  out.raw_reply = std::move(raw_reply);
  return out;
}

// ---------------------------------------------------------------------------
// Prompt

std::string PromptBundle::system_text() const {
  std::string out;
  for (const auto &[name, body] : system_sections) {
    if (!out.empty()) {
      out += "\n\n";
    }
    out += body;
  }
  return out;
}

const std::string &PromptBundle::section(std::string_view name) const {
  for (const auto &[n, body] : system_sections) {
    if (n == name) {
      return body;
    }
  }
  fail(ErrorCode::PreconditionFailed, "no prompt section " + std::string(name));
}

std::string compass_direction(double yaw_deg) {
  static const char *names[] = {"east", "north-east", "north", "north-west",
                                "west", "south-west", "south", "south-east"};
  double a = std::fmod(yaw_deg, 360.0);
  if (a < 0) {
    a += 360.0;
  }
  const int idx = static_cast<int>(std::floor((a + 22.5) / 45.0)) % 8;
  return names[idx];
}

namespace {

constexpr const char *kActionDefinitions =
    "Turn each command into a numbered list of actions. Every action must use one of these forms:\n"
    "- Move forward <d> m at <v> m/s. / Move backward <d> m at <v> m/s.\n"
    "- Turn left <a> deg at <w> deg/s. / Turn right <a> deg at <w> deg/s.\n"
    "- Navigate to the coordinates x = <x>, y = <y>, z = <z> at <v> m/s.\n"
    "- Navigate to the <destination> at <v> m/s.\n"
    "- Navigate to the detected <object> at <v> m/s.\n"
    "- Navigate to the detected object with the highest confidence at <v> m/s.\n"
    "- Move in a circle of radius <r> m at <v> m/s.\n"
    "- Move in an arc of radius <r> m through <a> deg at <v> m/s.\n"
    "- Move in a rectangle of length <l> m and width <w> m at <v> m/s.\n"
    "- Move in an L-shape of <a> m horizontal and <b> m vertical at <v> m/s.\n"
    "- Wait <t> s.\n"
    "- Limit maximum speed to <v> m/s.\n"
    "- Describe surroundings.\n"
    "- Report current position and orientation.\n"
    "- Capture image.\n"
    "- If <condition>: <action> Else: <action>\n"
    "Conditions: detection of <object|any object> above <p>; obstacle closer than <d> m; "
    "elapsed time over <t> s; travel time to x = <x>, y = <y>, z = <z> at <v> m/s over <t> s.\n"
    "Format:\nAction 1: <action>\nAction 2: <action>";

constexpr const char *kFewShot =
    "Examples.\n"
    "User: Drive ahead 3 meters at 0.4 m/s, then rotate left.\n"
    "Assistant:\nAction 1: Move forward 3 m at 0.4 m/s.\nAction 2: Turn left 90 deg at 30 deg/s.\n\n"
    "User: Visit the point (1, 4, 0) and then the kitchen at 0.6 m/s.\n"
    "Assistant:\nAction 1: Navigate to the coordinates x = 1, y = 4, z = 0 at 0.6 m/s.\n"
    "Action 2: Navigate to the kitchen at 0.6 m/s.\n\n"
    "User: Go over to the person you can see.\n"
    "Assistant:\nAction 1: Navigate to the detected person at 0.2 m/s.\n\n"
    "User: Drive a circle 4 meters across as fast as you can.\n"
    "Assistant:\nAction 1: Move in a circle of radius 2 m at 1 m/s.\n\n"
    "User: Rotate right 45 degrees, back up half a meter, go to the lobby and tell me what you see.\n"
    "Assistant:\nAction 1: Turn right 45 deg at 30 deg/s.\nAction 2: Move backward 0.5 m at 0.2 m/s.\n"
    "Action 3: Navigate to the lobby at 0.2 m/s.\nAction 4: Describe surroundings.\n\n"
    "User: What can you do?\n"
    "Assistant: I can drive, turn, follow shapes, go to places or objects, and describe what I see.";

} // namespace

PromptBundle build_system_prompt(const RobotContext &robot, const std::vector<std::string> &destinations,
                                 const langid::LanguageTag &language) {
  if (destinations.empty()) {
    fail(ErrorCode::PreconditionFailed, "prompt needs at least one named destination");
  }
  const std::string lang_name = langid::language_name(language.code);
  PromptBundle bundle;

  std::ostringstream id;
  id << "You are BabelBot, a multilingual wheeled mobile robot with a camera, a depth sensor and a range sensor. "
     << "Linear speed limits: " << format_number(robot.min_speed) << " m/s to " << format_number(robot.max_speed)
     << " m/s. Rotation speed limits: 0 deg/s to " << format_number(robot.max_angular_speed_deg) << " deg/s.\n"
     << "Status: yaw " << format_number(robot.yaw_deg) << " degrees, facing " << compass_direction(robot.yaw_deg)
     << "; position: x = " << format_number(robot.x) << ", y = " << format_number(robot.y)
     << ", z = " << format_number(robot.z) << ".\n"
     << "The user writes in " << lang_name << ". Answer questions about your status and abilities directly.";
  bundle.system_sections.emplace_back("identity_status", id.str());

  bundle.system_sections.emplace_back("action_definitions", kActionDefinitions);

  std::string dest_list;
  for (std::size_t i = 0; i < destinations.size(); ++i) {
    dest_list += (i ? ", " : "") + destinations[i];
  }
  std::ostringstream nav;
  nav << "Reply in the language the user wrote in. Known destinations: " << dest_list << ". "
      << "Coordinates and detected objects are also valid targets. "
      << "A command gets a numbered action list; a question gets a short direct answer with no actions. "
      << "Use " << format_number(robot.min_speed) << " m/s when no speed is given.";
  bundle.system_sections.emplace_back("navigation_rules", nav.str());

  bundle.system_sections.emplace_back("few_shot_examples", kFewShot);

  bundle.system_sections.emplace_back(
      "language_instruction", "Write your reply in " + lang_name +
                                  ". Always use the action names in English exactly as provided, even when the "
                                  "rest of the reply is in " + lang_name + ".");
  return bundle;
}

// ---------------------------------------------------------------------------
// LLM client

json to_wire(const ChatRequest &request) {
  json messages = json::array();
  for (const auto &m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  return {{"model", request.model},
          {"messages", std::move(messages)},
          {"temperature", request.temperature},
          {"max_tokens", request.max_tokens}};
}

std::string parse_chat_response(std::string_view body) {
  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) {
    fail(ErrorCode::LlmProtocolError, "response is not JSON");
  }
  try {
    const auto &content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) {
      fail(ErrorCode::LlmProtocolError, "message content is not a string");
    }
    return content.get<std::string>();
  } catch (const json::exception &e) {
    fail(ErrorCode::LlmProtocolError, std::string("missing choices[0].message.content: ") + e.what());
  }
}

void LlmConfig::apply_env() {
  if (const char *v = std::getenv("BABELBOT_LLM_ENDPOINT"); v != nullptr && *v != '\0') {
    endpoint = v;
  }
  if (const char *v = std::getenv("BABELBOT_LLM_MODEL"); v != nullptr && *v != '\0') {
    model = v;
  }
  if (const char *v = std::getenv("BABELBOT_LLM_KEY"); v != nullptr && *v != '\0') {
    api_key = v;
  }
}

std::string HttpLanguageModelClient::complete(const ChatRequest &request) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, url_re)) {
    fail(ErrorCode::LlmProtocolError, "bad endpoint URL: " + config_.endpoint);
  }
  const std::string base = m[1].str();
  const std::string path = m[2].matched ? m[2].str() : "/";

  httplib::Client client(base);
  const auto secs = static_cast<time_t>(config_.timeout_s);
  const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }
  const auto result = client.Post(path, headers, to_wire(request).dump(), "application/json");
  if (!result) {
    fail(ErrorCode::LlmTimeout, "LLM request failed: " + httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    fail(ErrorCode::LlmProtocolError, "LLM returned HTTP " + std::to_string(result->status));
  }
  return parse_chat_response(result->body);
}

Interpretation interpret(const Instruction &instruction, const PromptBundle &prompt, LanguageModelClient &client,
                         const LlmConfig &config) {
  ChatRequest request;
  request.model = config.model;
  request.temperature = config.temperature;
  request.max_tokens = config.max_tokens;
  request.language_hint = instruction.language.code;
  request.messages.push_back({"system", prompt.system_text()});
  request.messages.push_back({"user", prompt.user_message.empty() ? instruction.text : prompt.user_message});
  return split_reply(client.complete(request));
}

// ---------------------------------------------------------------------------
// Confirmation gate

namespace {

std::vector<std::string> string_list(const json &j, const char *key) {
  std::vector<std::string> out;
  if (j.contains(key)) {
    for (const auto &v : j.at(key)) {
      out.push_back(v.get<std::string>());
    }
  }
  return out;
}

bool is_clause_break(char32_t cp) {
  switch (cp) {
  case U',': case U';': case U'.': case U'!': case U'?': case U':':
  case 0xFF0C: case 0x3002: case 0xFF01: case 0xFF1F: case 0x3001: case 0xFF1B:
  case 0x060C: case 0x061B: case 0x061F: case 0x0964:
    return true;
  default:
    return false;
  }
}

/// Lowercased word tokens; unsegmented scripts yield one token per codepoint.
std::vector<std::u32string> word_tokens(std::u32string_view clause) {
  std::vector<std::u32string> out;
  std::u32string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  };
  for (char32_t cp : clause) {
    if (cp == 0x2019) {
      cp = U'\'';
    }
    if (text::is_unsegmented(cp)) {
      flush();
      out.push_back(std::u32string(1, text::to_lower(cp)));
    } else if (text::is_letter(cp) || text::is_digit(cp) || cp == U'\'') {
      cur.push_back(text::to_lower(cp));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::vector<std::vector<std::u32string>> clauses(std::string_view reply) {
  std::vector<std::vector<std::u32string>> out;
  std::u32string cur;
  for (char32_t cp : text::decode(reply)) {
    if (is_clause_break(cp)) {
      out.push_back(word_tokens(cur));
      cur.clear();
    } else {
      cur.push_back(cp);
    }
  }
  out.push_back(word_tokens(cur));
  return out;
}

/// Start positions of `needle` as a contiguous token run in `hay`.
std::vector<std::size_t> find_runs(const std::vector<std::u32string> &hay, const std::vector<std::u32string> &needle) {
  std::vector<std::size_t> out;
  if (needle.empty() || needle.size() > hay.size()) {
    return out;
  }
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) {
      out.push_back(i);
    }
  }
  return out;
}

struct CompiledTemplates {
  std::vector<std::pair<std::string, std::vector<std::u32string>>> positive;
  std::vector<std::pair<std::string, std::vector<std::u32string>>> negative;
  std::vector<std::u32string> negators;
};

void compile_into(CompiledTemplates &c, const TemplateLexicon &lex) {
  for (const auto &p : lex.positive) {
    c.positive.emplace_back(p, word_tokens(text::decode(p)));
  }
  for (const auto &n : lex.negative) {
    c.negative.emplace_back(n, word_tokens(text::decode(n)));
  }
  for (const auto &n : lex.negators) {
    for (auto &t : word_tokens(text::decode(n))) {
      c.negators.push_back(std::move(t));
    }
  }
}

ConfirmationDecision classify(std::string_view reply, const CompiledTemplates &templates) {
  ConfirmationDecision d;
  bool any_hit = false;
  for (const auto &clause : clauses(reply)) {
    if (clause.empty()) {
      continue;
    }
    int negative_hits = 0;
    std::string first_negative;
    for (const auto &[raw, toks] : templates.negative) {
      const auto runs = find_runs(clause, toks);
      if (!runs.empty() && first_negative.empty()) {
        first_negative = raw;
      }
      negative_hits += static_cast<int>(runs.size());
    }
    std::vector<std::pair<std::string, std::size_t>> positive_hits;
    for (const auto &[raw, toks] : templates.positive) {
      for (std::size_t pos : find_runs(clause, toks)) {
        positive_hits.emplace_back(raw, pos);
      }
    }
    if (negative_hits > 0) {
      any_hit = true;
      d.score += kNegativeWeight * negative_hits;
      if (d.matched_template.empty()) {
        d.matched_template = first_negative;
      }
      continue; // positives in this clause are overridden
    }
    for (const auto &[raw, pos] : positive_hits) {
      any_hit = true;
      const bool negated = std::any_of(clause.begin(), clause.begin() + static_cast<std::ptrdiff_t>(pos),
                                       [&](const std::u32string &tok) {
                                         return std::find(templates.negators.begin(), templates.negators.end(),
                                                          tok) != templates.negators.end();
                                       });
      d.score += negated ? kNegativeWeight : kPositiveWeight;
      if (d.matched_template.empty()) {
        d.matched_template = raw;
      }
    }
  }
  if (!any_hit) {
    fail(ErrorCode::Indeterminate, "no confirmation template matched");
  }
  d.value = d.score > 0.0 ? 1 : 0;
  return d;
}

} // namespace

TemplateLexicon TemplateLexicon::from_json(const json &j, std::string language) {
  TemplateLexicon lex;
  lex.language = std::move(language);
  lex.positive = string_list(j, "positive");
  lex.negative = string_list(j, "negative");
  lex.negators = string_list(j, "negators");
  return lex;
}

LexiconSet LexiconSet::load_directory(const std::filesystem::path &dir) {
  LexiconSet set;
  std::error_code ec;
  for (const auto &entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.path().extension() != ".json") {
      continue;
    }
    std::ifstream in(entry.path());
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
      fail(ErrorCode::InvalidFormat, "bad lexicon " + entry.path().string());
    }
    set.add(TemplateLexicon::from_json(j, entry.path().stem().string()));
  }
  if (ec) {
    fail(ErrorCode::IoError, "cannot read lexicon directory " + dir.string());
  }
  return set;
}

void LexiconSet::add(TemplateLexicon lexicon) {
  std::string code = lexicon.language;
  lexicons_[code] = std::move(lexicon);
}

const TemplateLexicon &LexiconSet::for_language(std::string_view code) const {
  if (auto it = lexicons_.find(std::string(code)); it != lexicons_.end()) {
    return it->second;
  }
  if (auto it = lexicons_.find("en"); it != lexicons_.end()) {
    return it->second;
  }
  fail(ErrorCode::PreconditionFailed, "no lexicon for " + std::string(code) + " and no English fallback");
}

ConfirmationDecision classify_confirmation(std::string_view reply, const langid::LanguageTag &,
                                           const TemplateLexicon &lexicon) {
  CompiledTemplates c;
  compile_into(c, lexicon);
  return classify(reply, c);
}

ConfirmationDecision classify_confirmation(std::string_view reply, const langid::LanguageTag &language,
                                           const LexiconSet &lexicons) {
  CompiledTemplates c;
  const auto &primary = lexicons.for_language(language.code);
  compile_into(c, primary);
  if (primary.language != "en") {
    if (auto it = lexicons.all().find("en"); it != lexicons.all().end()) {
      compile_into(c, it->second);
    }
  }
  return classify(reply, c);
}

// ---------------------------------------------------------------------------
// Mock

std::string normalize_command(std::string_view s) {
  std::string lower = text::to_lower(text::trim(s));
  std::string out;
  bool space = false;
  for (char c : lower) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      space = true;
      continue;
    }
    if (space && !out.empty()) {
      out.push_back(' ');
    }
    space = false;
    out.push_back(c);
  }
  // Trailing ASCII and common full-width / Devanagari sentence punctuation.
  for (bool again = true; again;) {
    again = false;
    for (std::string_view p : {".", "!", "?", ";", ",", "\xE3\x80\x82", "\xEF\xBC\x81", "\xEF\xBC\x9F",
                               "\xD8\x9F", "\xE0\xA5\xA4"}) {
      if (out.size() >= p.size() && std::string_view(out).substr(out.size() - p.size()) == p) {
        out.resize(out.size() - p.size());
        while (!out.empty() && out.back() == ' ') {
          out.pop_back();
        }
        again = true;
      }
    }
  }
  return out;
}

FixtureCorpus FixtureCorpus::load_jsonl(const std::filesystem::path &file) {
  std::ifstream in(file);
  if (!in) {
    fail(ErrorCode::IoError, "cannot open fixtures " + file.string());
  }
  FixtureCorpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) {
      continue;
    }
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      fail(ErrorCode::InvalidFormat, file.string() + ":" + std::to_string(lineno) + ": not a JSON object");
    }
    FixtureRecord r;
    r.lang = j.value("lang", "");
    r.text = j.value("text", "");
    r.reply = j.value("reply", "");
    r.category = j.value("category", "");
    r.gold_actions = string_list(j, "gold_actions");
    corpus.add(std::move(r));
  }
  return corpus;
}

void FixtureCorpus::add(FixtureRecord record) { records_.push_back(std::move(record)); }

const FixtureRecord *FixtureCorpus::find(std::string_view text, std::string_view lang) const {
  const std::string key = normalize_command(text);
  const FixtureRecord *any_lang = nullptr;
  for (const auto &r : records_) {
    if (normalize_command(r.text) != key) {
      continue;
    }
    if (r.lang == lang) {
      return &r;
    }
    if (any_lang == nullptr) {
      any_lang = &r;
    }
  }
  return any_lang;
}

namespace {

std::optional<ActionPrimitive> rule_phrase(std::string phrase) {
  phrase = text::trim(phrase);
  for (std::string_view polite : {"please ", "could you ", "can you "}) {
    if (phrase.starts_with(polite)) {
      phrase = phrase.substr(polite.size());
    }
  }
  if (phrase.starts_with("where are you") || phrase.starts_with("what is your position") ||
      phrase.starts_with("what's your position")) {
    return ActionPrimitive(ReportPose{});
  }
  if (phrase.starts_with("what do you see") || phrase.starts_with("what can you see")) {
    return ActionPrimitive(DescribeSurroundings{});
  }
  try {
    return parse_action_phrase(phrase, false, nullptr);
  } catch (const Error &) {
    return std::nullopt;
  }
}

/// Cuts an English command at sequencing words and commas, then regroups the
/// pieces into the largest number of phrases that each parse on their own
/// (so "x = 2, y = 3" stays together while "... and turn right" splits off).
std::vector<ActionPrimitive> rule_actions(const std::string &lower) {
  static const std::regex sep(R"(\s*(?:,\s*and then\b|,\s*then\b|\band then\b|\bthen\b|,\s*and\b|;|,|\band\b)\s*)");
  std::vector<std::string> pieces;
  std::vector<std::string> glue;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(lower.begin(), lower.end(), sep); it != std::sregex_iterator(); ++it) {
    pieces.push_back(lower.substr(last, static_cast<std::size_t>(it->position()) - last));
    glue.push_back(it->str());
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  pieces.push_back(lower.substr(last));

  const std::size_t n = pieces.size();
  constexpr int kImpossible = -1;
  std::vector<int> best(n + 1, kImpossible);
  std::vector<std::size_t> cut(n + 1, 0);
  std::vector<std::optional<ActionPrimitive>> chosen(n + 1);
  best[n] = 0;
  for (std::size_t i = n; i-- > 0;) {
    std::string joined;
    for (std::size_t j = i; j < n; ++j) {
      joined += pieces[j];
      if (best[j + 1] != kImpossible && !text::trim(joined).empty()) {
        if (auto action = rule_phrase(joined); action && best[j + 1] + 1 > best[i]) {
          best[i] = best[j + 1] + 1;
          cut[i] = j + 1;
          chosen[i] = std::move(action);
        }
      }
      if (j + 1 < n) {
        joined += glue[j];
      }
    }
  }
  std::vector<ActionPrimitive> out;
  if (best[0] == kImpossible) {
    return out;
  }
  for (std::size_t i = 0; i < n; i = cut[i]) {
    out.push_back(*chosen[i]);
  }
  return out;
}

} // namespace

Interpretation mock_complete(const Instruction &instruction, const FixtureCorpus &fixtures) {
  if (const auto *hit = fixtures.find(instruction.text, instruction.language.code)) {
    return split_reply(hit->reply);
  }
  if (instruction.language.code == "en" || instruction.language.code.empty()) {
    const std::string lower = normalize_command(instruction.text);
    std::vector<std::string> lines;
    for (const auto &action : rule_actions(lower)) {
      lines.push_back("Action " + std::to_string(lines.size() + 1) + ": " + format_action(action));
    }
    if (!lines.empty()) {
      std::string reply;
      for (std::size_t i = 0; i < lines.size(); ++i) {
        reply += (i ? "\n" : "") + lines[i];
      }
      return split_reply(std::move(reply));
    }
  }
  fail(ErrorCode::NoFixture, "no fixture or rule for \"" + instruction.text + "\"");
}

std::string MockLanguageModelClient::complete(const ChatRequest &request) {
  Instruction instr;
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == "user") {
      instr.text = it->content;
      break;
    }
  }
  instr.language = langid::make_tag(request.language_hint.empty() ? "en" : request.language_hint,
                                    langid::default_script(request.language_hint));
  auto reply = mock_complete(instr, *fixtures_).raw_reply;
  if (hook_) {
    hook_(reply);
  }
  return reply;
}

} // namespace babelbot::engine
