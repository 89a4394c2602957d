#pragma once

#include "babelbot/actions.hpp"
#include "babelbot/langid.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace babelbot::engine {

struct Instruction {
  std::string text;
  langid::LanguageTag language;
  std::int64_t issued_at_ms = 0;
  std::string session_id;
};

struct Interpretation {
  std::string raw_reply;
  std::string summary;                 // non-action lines of the reply
  std::vector<std::string> plan_lines; // lines matching "Action k: ..."
};

/// Splits a completion into its action lines and the surrounding prose.
Interpretation split_reply(std::string raw_reply);

// ---------------------------------------------------------------------------
// Prompt

struct RobotContext {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw_deg = 0.0;
  double min_speed = kMinLinearSpeed;
  double max_speed = kMaxLinearSpeed;
  double max_angular_speed_deg = kMaxAngularSpeedDeg;
};

struct PromptBundle {
  /// Ordered (name, text): identity_status, action_definitions, navigation_rules,
  /// few_shot_examples, language_instruction.
  std::vector<std::pair<std::string, std::string>> system_sections;
  std::string user_message;

  [[nodiscard]] std::string system_text() const;
  [[nodiscard]] const std::string &section(std::string_view name) const;
};

/// Eight-way compass word for a yaw in degrees (0 = east, counter-clockwise).
std::string compass_direction(double yaw_deg);

/// Throws PreconditionFailed when `destinations` is empty.
PromptBundle build_system_prompt(const RobotContext &robot, const std::vector<std::string> &destinations,
                                 const langid::LanguageTag &language);

// ---------------------------------------------------------------------------
// LLM client

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 500;
  /// Not serialized; lets offline clients key fixtures by language.
  std::string language_hint;
};

nlohmann::json to_wire(const ChatRequest &request);
/// Extracts choices[0].message.content; throws LlmProtocolError otherwise.
std::string parse_chat_response(std::string_view body);

struct LlmConfig {
  std::string endpoint = "http://127.0.0.1:8080/v1/chat/completions";
  std::string model = "gpt-4o";
  std::string api_key;
  double timeout_s = 30.0;
  double temperature = 0.0;
  int max_tokens = 500;

  /// Applies BABELBOT_LLM_ENDPOINT / _MODEL / _KEY when set.
  void apply_env();
};

class LanguageModelClient {
public:
  virtual ~LanguageModelClient() = default;
  virtual std::string complete(const ChatRequest &request) = 0;
  [[nodiscard]] virtual Provenance provenance() const { return Provenance::LLM; }
};

/// Chat-completion client over HTTP(S).
class HttpLanguageModelClient final : public LanguageModelClient {
public:
  explicit HttpLanguageModelClient(LlmConfig config) : config_(std::move(config)) {}
  std::string complete(const ChatRequest &request) override;

private:
  LlmConfig config_;
};

/// Runs one completion at temperature 0 and splits the reply.
/// Throws LlmTimeout or LlmProtocolError from the client.
Interpretation interpret(const Instruction &instruction, const PromptBundle &prompt, LanguageModelClient &client,
                         const LlmConfig &config = {});

// ---------------------------------------------------------------------------
// Confirmation gate

struct TemplateLexicon {
  std::string language;
  std::vector<std::string> positive;
  std::vector<std::string> negative;
  /// Words that flip a positive hit that follows them in the same clause.
  std::vector<std::string> negators;

  static TemplateLexicon from_json(const nlohmann::json &j, std::string language);
};

class LexiconSet {
public:
  static LexiconSet load_directory(const std::filesystem::path &dir);
  void add(TemplateLexicon lexicon);
  /// Falls back to English when the language has no lexicon.
  [[nodiscard]] const TemplateLexicon &for_language(std::string_view code) const;
  [[nodiscard]] const std::map<std::string, TemplateLexicon> &all() const { return lexicons_; }

private:
  std::map<std::string, TemplateLexicon> lexicons_;
};

struct ConfirmationDecision {
  int value = 0; // rho_d
  std::string matched_template;
  double score = 0.0;
};

inline constexpr double kPositiveWeight = 1.0;
inline constexpr double kNegativeWeight = -2.0;

/// Template-feature classifier: +1 per positive hit, -2 per negative hit; a
/// negative hit (or a negator before a positive) overrides positives in its
/// clause. Throws Indeterminate when nothing matches.
ConfirmationDecision classify_confirmation(std::string_view reply, const langid::LanguageTag &language,
                                           const TemplateLexicon &lexicon);
/// Uses the language's lexicon plus English.
ConfirmationDecision classify_confirmation(std::string_view reply, const langid::LanguageTag &language,
                                           const LexiconSet &lexicons);

// ---------------------------------------------------------------------------
// Offline substitute for the LLM

struct FixtureRecord {
  std::string lang;
  std::string text;
  std::string reply;
  std::vector<std::string> gold_actions;
  std::string category;
};

class FixtureCorpus {
public:
  static FixtureCorpus load_jsonl(const std::filesystem::path &file);
  void add(FixtureRecord record);

  [[nodiscard]] const FixtureRecord *find(std::string_view text, std::string_view lang) const;
  [[nodiscard]] const std::vector<FixtureRecord> &records() const { return records_; }

private:
  std::vector<FixtureRecord> records_;
};

/// Lowercased, whitespace-collapsed text without trailing punctuation.
std::string normalize_command(std::string_view text);

/// Canned fixture reply, or the English rule grammar. Throws NoFixture.
Interpretation mock_complete(const Instruction &instruction, const FixtureCorpus &fixtures);

/// Deterministic client backed by a fixture corpus. The optional hook observes
/// each completion (the benchmark uses it to advance a simulated clock).
class MockLanguageModelClient final : public LanguageModelClient {
public:
  explicit MockLanguageModelClient(const FixtureCorpus &fixtures) : fixtures_(&fixtures) {}
  std::string complete(const ChatRequest &request) override;
  [[nodiscard]] Provenance provenance() const override { return Provenance::Mock; }
  void on_complete(std::function<void(const std::string &reply)> hook) { hook_ = std::move(hook); }

private:
  const FixtureCorpus *fixtures_;
  std::function<void(const std::string &)> hook_;
};

} // namespace babelbot::engine
