#include "babelbot/engine.hpp"
#include "babelbot/error.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <thread>

using namespace babelbot;
using namespace babelbot::engine;
using testing_support::data_dir;

namespace {

langid::LanguageTag tag(const std::string &code) { return langid::make_tag(code, langid::default_script(code)); }

const FixtureCorpus &corpus() {
  static const FixtureCorpus c = FixtureCorpus::load_jsonl(data_dir() / "fixtures" / "corpus.jsonl");
  return c;
}

const LexiconSet &lexicons() {
  static const LexiconSet s = LexiconSet::load_directory(data_dir() / "lexicon");
  return s;
}

Instruction instr(const std::string &text, const std::string &lang = "en") {
  Instruction i;
  i.text = text;
  i.language = tag(lang);
  return i;
}

} // namespace

TEST(Prompt, IdentityCarriesPose) {
  const auto p = build_system_prompt(RobotContext{}, {"kitchen"}, tag("en"));
  EXPECT_NE(p.section("identity_status").find("position: x = 0"), std::string::npos);
  EXPECT_NE(p.section("navigation_rules").find("kitchen"), std::string::npos);
}

TEST(Prompt, SectionOrder) {
  const auto p = build_system_prompt(RobotContext{}, {"kitchen", "lobby"}, tag("en"));
  ASSERT_EQ(p.system_sections.size(), 5U);
  const char *expected[] = {"identity_status", "action_definitions", "navigation_rules", "few_shot_examples",
                            "language_instruction"};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(p.system_sections[i].first, expected[i]);
  }
  const auto text = p.system_text();
  EXPECT_LT(text.find(p.section("identity_status")), text.find(p.section("language_instruction")));
}

TEST(Prompt, GermanKeepsEnglishActionNames) {
  const auto p = build_system_prompt(RobotContext{}, {"kitchen"}, tag("de"));
  const auto &lang = p.section("language_instruction");
  EXPECT_NE(lang.find("German"), std::string::npos);
  EXPECT_NE(lang.find("use the action names in English exactly as provided"), std::string::npos);
  EXPECT_NE(p.section("action_definitions").find("Move forward"), std::string::npos);
}

TEST(Prompt, InterpolatesYaw) {
  RobotContext r;
  r.x = 1.5;
  r.y = -2;
  r.yaw_deg = 90;
  const auto p = build_system_prompt(r, {"kitchen"}, tag("en"));
  const auto &id = p.section("identity_status");
  EXPECT_NE(id.find("position: x = 1.5, y = -2"), std::string::npos);
  EXPECT_NE(id.find("yaw 90"), std::string::npos);
  EXPECT_NE(id.find("north"), std::string::npos);
}

TEST(Prompt, EmptyDestinations) {
  EXPECT_ERROR_CODE(build_system_prompt(RobotContext{}, {}, tag("en")), ErrorCode::PreconditionFailed);
}

TEST(Prompt, Compass) {
  EXPECT_EQ(compass_direction(0), "east");
  EXPECT_EQ(compass_direction(-90), "south");
  EXPECT_EQ(compass_direction(180), "west");
  EXPECT_EQ(compass_direction(44), "north-east");
  EXPECT_EQ(compass_direction(725), "east");
}

TEST(Interpret, MockTwoStep) {
  MockLanguageModelClient client(corpus());
  const auto i = instr("Move forward 2 meters at 0.2m/s and then turn right at 30 deg/s.");
  const auto out = interpret(i, build_system_prompt({}, {"kitchen"}, i.language), client);
  const std::vector<std::string> expected{"Action 1: Move forward 2 m at 0.2 m/s.",
                                          "Action 2: Turn right 90 deg at 30 deg/s."};
  EXPECT_EQ(out.plan_lines, expected);
}

TEST(Interpret, CapabilitiesQuestion) {
  MockLanguageModelClient client(corpus());
  const auto i = instr("What are your capabilities?");
  const auto out = interpret(i, build_system_prompt({}, {"kitchen"}, i.language), client);
  EXPECT_TRUE(out.plan_lines.empty());
  EXPECT_FALSE(out.summary.empty());
}

TEST(Interpret, DeterministicUnderMock) {
  MockLanguageModelClient client(corpus());
  const auto prompt = build_system_prompt({}, {"kitchen"}, tag("en"));
  for (const auto &r : corpus().records()) {
    Instruction i = instr(r.text, r.lang);
    const auto a = interpret(i, prompt, client);
    const auto b = interpret(i, prompt, client);
    EXPECT_EQ(a.raw_reply, b.raw_reply);
    EXPECT_EQ(a.plan_lines, b.plan_lines);
  }
}

TEST(Interpret, SplitReplyKeepsProse) {
  const auto out = split_reply("Sure, here is the plan:\n\nAction 1: Capture image.\n**Action 2:** Describe surroundings.\nDone.");
  ASSERT_EQ(out.plan_lines.size(), 2U);
  EXPECT_EQ(out.summary, "Sure, here is the plan:\nDone.");
}

TEST(LlmWire, RequestShape) {
  ChatRequest r;
  r.model = "m";
  r.messages = {{"system", "s"}, {"user", "u"}};
  r.language_hint = "de";
  const auto j = to_wire(r);
  EXPECT_EQ(j.at("model"), "m");
  EXPECT_EQ(j.at("temperature"), 0.0);
  EXPECT_EQ(j.at("max_tokens"), 500);
  ASSERT_EQ(j.at("messages").size(), 2U);
  EXPECT_EQ(j.at("messages")[1].at("role"), "user");
  EXPECT_FALSE(j.contains("language_hint"));
}

TEST(LlmWire, ParseResponse) {
  EXPECT_EQ(parse_chat_response(R"({"choices":[{"message":{"role":"assistant","content":"hi"}}]})"), "hi");
  EXPECT_ERROR_CODE(parse_chat_response("not json"), ErrorCode::LlmProtocolError);
  EXPECT_ERROR_CODE(parse_chat_response(R"({"choices":[]})"), ErrorCode::LlmProtocolError);
  EXPECT_ERROR_CODE(parse_chat_response(R"({"choices":[{"message":{"content":3}}]})"), ErrorCode::LlmProtocolError);
}

namespace {

// Minimal chat-completion server on an ephemeral port.
class FakeLlm {
public:
  explicit FakeLlm(std::chrono::milliseconds delay, int status = 200) {
    server_.Post("/v1/chat/completions", [this, delay, status](const httplib::Request &req, httplib::Response &res) {
      last_body = req.body;
      auth = req.get_header_value("Authorization");
      std::this_thread::sleep_for(delay);
      res.status = status;
      res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"Action 1: Capture image."}}]})",
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeLlm() {
    server_.stop();
    thread_.join();
  }
  [[nodiscard]] std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }
  std::string last_body;
  std::string auth;

private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

int closed_port() {
  httplib::Server s;
  return s.bind_to_any_port("127.0.0.1"); // released when s goes out of scope
}

} // namespace

TEST(HttpClient, RoundTrip) {
  FakeLlm llm(std::chrono::milliseconds(0));
  LlmConfig cfg;
  cfg.endpoint = llm.endpoint();
  cfg.api_key = "k";
  cfg.timeout_s = 5;
  HttpLanguageModelClient client(cfg);
  const auto i = instr("take a picture");
  const auto out = interpret(i, build_system_prompt({}, {"kitchen"}, i.language), client, cfg);
  ASSERT_EQ(out.plan_lines.size(), 1U);
  const auto sent = nlohmann::json::parse(llm.last_body);
  EXPECT_EQ(sent.at("messages")[0].at("role"), "system");
  EXPECT_EQ(sent.at("messages")[1].at("content"), "take a picture");
  EXPECT_EQ(llm.auth, "Bearer k");
}

TEST(HttpClient, ServerDown) {
  LlmConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(closed_port()) + "/v1/chat/completions";
  cfg.timeout_s = 1;
  HttpLanguageModelClient client(cfg);
  ChatRequest r;
  r.messages = {{"user", "x"}};
  EXPECT_ERROR_CODE(client.complete(r), ErrorCode::LlmTimeout);
}

TEST(HttpClient, DeadlineExceeded) {
  FakeLlm llm(std::chrono::milliseconds(1500));
  LlmConfig cfg;
  cfg.endpoint = llm.endpoint();
  cfg.timeout_s = 0.3;
  HttpLanguageModelClient client(cfg);
  ChatRequest r;
  r.messages = {{"user", "x"}};
  EXPECT_ERROR_CODE(client.complete(r), ErrorCode::LlmTimeout);
}

TEST(HttpClient, ServerError) {
  FakeLlm llm(std::chrono::milliseconds(0), 500);
  LlmConfig cfg;
  cfg.endpoint = llm.endpoint();
  HttpLanguageModelClient client(cfg);
  ChatRequest r;
  r.messages = {{"user", "x"}};
  EXPECT_ERROR_CODE(client.complete(r), ErrorCode::LlmProtocolError);
}

TEST(LlmConfigEnv, Overrides) {
  ::setenv("BABELBOT_LLM_MODEL", "test-model", 1);
  ::setenv("BABELBOT_LLM_ENDPOINT", "", 1);
  LlmConfig cfg;
  cfg.apply_env();
  EXPECT_EQ(cfg.model, "test-model");
  EXPECT_EQ(cfg.endpoint, LlmConfig{}.endpoint);
  ::unsetenv("BABELBOT_LLM_MODEL");
  ::unsetenv("BABELBOT_LLM_ENDPOINT");
}

TEST(Confirmation, Examples) {
  const auto &en = lexicons().for_language("en");
  EXPECT_EQ(classify_confirmation("that's correct, proceed with execution", tag("en"), en).value, 1);
  EXPECT_EQ(classify_confirmation("this is inaccurate, cancel the plan", tag("en"), en).value, 0);
  EXPECT_EQ(classify_confirmation("That's correct, but do not execute the plans!", tag("en"), en).value, 0);
}

TEST(Confirmation, NegatorFlipsPositive) {
  const auto &en = lexicons().for_language("en");
  EXPECT_EQ(classify_confirmation("please never proceed", tag("en"), en).value, 0);
  EXPECT_EQ(classify_confirmation("Yes!", tag("en"), en).value, 1);
}

TEST(Confirmation, NegativeOnlyOverridesItsClause) {
  const auto &en = lexicons().for_language("en");
  // Two positive clauses (+2 each run) against one negative (-2).
  const auto d = classify_confirmation("yes. proceed with execution. never mind the warning, no", tag("en"), en);
  EXPECT_EQ(d.value, 0);
  const auto e = classify_confirmation("sounds good; go ahead; confirmed. wrong light though", tag("en"), en);
  EXPECT_GT(e.score, 0);
  EXPECT_EQ(e.value, 1);
}

TEST(Confirmation, Indeterminate) {
  const auto &en = lexicons().for_language("en");
  EXPECT_ERROR_CODE(classify_confirmation("what is the weather", tag("en"), en), ErrorCode::Indeterminate);
  EXPECT_ERROR_CODE(classify_confirmation("", tag("en"), en), ErrorCode::Indeterminate);
}

TEST(Confirmation, NonEnglish) {
  EXPECT_EQ(classify_confirmation("Ja, das ist richtig.", tag("de"), lexicons()).value, 1);
  EXPECT_EQ(classify_confirmation("Nein, bitte abbrechen.", tag("de"), lexicons()).value, 0);
  EXPECT_EQ(classify_confirmation("好的，执行吧", tag("zh"), lexicons()).value, 1);
  EXPECT_EQ(classify_confirmation("不要执行", tag("zh"), lexicons()).value, 0);
  EXPECT_EQ(classify_confirmation("ok", tag("sw"), lexicons()).value, 1); // English fallback templates
}

TEST(Confirmation, LexiconsShipped) {
  for (const char *code : {"en", "es", "de", "fr", "ru", "zh", "ar", "hi", "sw", "pcm"}) {
    ASSERT_TRUE(lexicons().all().count(code)) << code;
    const auto &lex = lexicons().all().at(code);
    EXPECT_FALSE(lex.positive.empty()) << code;
    EXPECT_FALSE(lex.negative.empty()) << code;
  }
  EXPECT_EQ(lexicons().for_language("xx").language, "en");
}

// Every template classifies as its own class, alone and with English mixed in.
TEST(ConfirmationProperty, Antisymmetry) {
  for (const auto &[code, lex] : lexicons().all()) {
    const auto t = tag(code);
    for (const auto &p : lex.positive) {
      EXPECT_EQ(classify_confirmation(p, t, lex).value, 1) << code << ": " << p;
      EXPECT_EQ(classify_confirmation(p, t, lexicons()).value, 1) << code << " (+en): " << p;
    }
    for (const auto &n : lex.negative) {
      EXPECT_EQ(classify_confirmation(n, t, lex).value, 0) << code << ": " << n;
      EXPECT_EQ(classify_confirmation(n, t, lexicons()).value, 0) << code << " (+en): " << n;
    }
  }
}

TEST(Mock, RulePath) {
  const auto out = mock_complete(instr("move forward 1 meter"), corpus());
  ASSERT_EQ(out.plan_lines.size(), 1U);
  EXPECT_EQ(out.plan_lines[0], "Action 1: Move forward 1 m at 0.2 m/s.");
}

TEST(Mock, RuleSplitsSequence) {
  const auto out = mock_complete(instr("Go to x = 2, y = 3, then turn left 45 degrees and wait 2 seconds"), corpus());
  const std::vector<std::string> expected{"Action 1: Navigate to the coordinates x = 2, y = 3, z = 0 at 0.2 m/s.",
                                          "Action 2: Turn left 45 deg at 30 deg/s.", "Action 3: Wait 2 s."};
  EXPECT_EQ(out.plan_lines, expected);
}

TEST(Mock, FixtureHitIsVerbatim) {
  for (const auto &r : corpus().records()) {
    const auto out = mock_complete(instr(r.text, r.lang), corpus());
    EXPECT_EQ(out.raw_reply, r.reply) << r.lang << ": " << r.text;
  }
}

TEST(Mock, NormalizedLookup) {
  const auto &r = corpus().records().front();
  const auto out = mock_complete(instr("  " + r.text + "  ", r.lang), corpus());
  EXPECT_EQ(out.raw_reply, r.reply);
}

TEST(Mock, NoFixture) {
  EXPECT_ERROR_CODE(mock_complete(instr("sing me a song about lighthouses"), corpus()), ErrorCode::NoFixture);
  EXPECT_ERROR_CODE(mock_complete(instr("Bewege dich zehn Meter nach links", "de"), corpus()), ErrorCode::NoFixture);
}

TEST(Mock, FixtureGoldParses) {
  for (const auto &r : corpus().records()) {
    const auto out = mock_complete(instr(r.text, r.lang), corpus());
    const auto plan = parse_action_lines(out.plan_lines, tag(r.lang));
    ASSERT_EQ(plan.actions.size(), r.gold_actions.size()) << r.lang << ": " << r.text;
    for (std::size_t k = 0; k < plan.actions.size(); ++k) {
      EXPECT_EQ(format_action(plan.actions[k]), r.gold_actions[k]) << r.lang << ": " << r.text;
    }
  }
}
