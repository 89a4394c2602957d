#include "babelbot/engine.hpp"
#include "babelbot/langid.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace babelbot;
using namespace babelbot::langid;

namespace {

const LanguageProfileSet &profiles() {
  static const LanguageProfileSet set = LanguageProfileSet::load_directory(testing_support::data_dir() / "profiles");
  return set;
}

} // namespace

TEST(Langid, ShipsTenProfilesIncludingNonLatinAndCreole) {
  EXPECT_GE(profiles().profiles().size(), 10u);
  ASSERT_NE(profiles().find("pcm"), nullptr);
  ASSERT_NE(profiles().find("zh"), nullptr);
  EXPECT_EQ(profiles().find("zh")->script(), text::Script::Han);
  EXPECT_EQ(profiles().find("ru")->script(), text::Script::Cyrillic);
  EXPECT_EQ(profiles().find("ar")->script(), text::Script::Arabic);
  EXPECT_EQ(profiles().find("hi")->script(), text::Script::Devanagari);
}

// Expected codes confirmed with an off-the-shelf trigram detector.
TEST(Langid, DetectsReferenceExamples) {
  EXPECT_EQ(detect_language("Move forward 2 meters", profiles()).code, "en");
  EXPECT_EQ(detect_language("Gehe 2 Meter geradeaus", profiles()).code, "de");
}

TEST(Langid, EmptyTextFails) {
  EXPECT_ERROR_CODE(detect_language("", profiles()), ErrorCode::EmptyText);
  EXPECT_ERROR_CODE(detect_language("   \t", profiles()), ErrorCode::EmptyText);
}

TEST(Langid, NoProfileMatchBelowFloor) {
  // Digits only: no trigrams at all, so every cosine is zero.
  EXPECT_ERROR_CODE(detect_language("12 34 56", profiles()), ErrorCode::NoProfileMatch);
  // A script we ship no profile for.
  EXPECT_ERROR_CODE(detect_language("Γειά σου κόσμε", profiles()), ErrorCode::NoProfileMatch);
}

TEST(Langid, ConfidenceInUnitInterval) {
  for (const char *s : {"Move forward", "Avanza dos metros", "向前移动两米", "Waka go kitchen"}) {
    const auto tag = detect_language(s, profiles());
    EXPECT_GE(tag.confidence, 0.0);
    EXPECT_LE(tag.confidence, 1.0);
    EXPECT_FALSE(tag.code.empty());
  }
}

TEST(Langid, Deterministic) {
  const std::string s = "Fahre einen Kreis mit 2 Metern Durchmesser";
  const auto a = detect_language(s, profiles());
  for (int i = 0; i < 20; ++i) {
    const auto b = detect_language(s, profiles());
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.confidence, b.confidence);
  }
}

// Property: Han-only text never maps to a Latin-script language.
TEST(Langid, HanTextNeverYieldsLatinCode) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> cp(0x4E00, 0x9FA5);
  std::uniform_int_distribution<int> len(1, 12);
  for (int trial = 0; trial < 300; ++trial) {
    std::u32string s;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      s.push_back(static_cast<char32_t>(cp(rng)));
    }
    try {
      const auto tag = detect_language(text::encode(s), profiles());
      EXPECT_EQ(tag.script, text::Script::Han);
      EXPECT_EQ(profiles().find(tag.code)->script(), text::Script::Han);
    } catch (const Error &e) {
      EXPECT_EQ(e.code(), ErrorCode::NoProfileMatch);
    }
  }
}

TEST(Langid, TiesGoToLargerProfile) {
  // Two profiles with identical cosine against "ab"; the larger one has an
  // extra zero-weight entry.
  LanguageProfileSet tie;
  tie.add(LanguageProfile("small", {{" ab", 1.0}, {"ab ", 1.0}}));
  tie.add(LanguageProfile("large", {{" ab", 1.0}, {"ab ", 1.0}, {"q\xC3\xA9q", 0.0}}));
  const auto tag = detect_language("ab", tie);
  EXPECT_EQ(tag.code, "large");
  EXPECT_EQ(tag.confidence, 0.0);
}

TEST(Langid, FixtureCorpusAccuracy) {
  const auto corpus = engine::FixtureCorpus::load_jsonl(testing_support::data_dir() / "fixtures" / "corpus.jsonl");
  std::size_t correct = 0;
  for (const auto &r : corpus.records()) {
    try {
      if (detect_language(r.text, profiles()).code == r.lang) {
        ++correct;
      }
    } catch (const Error &) {
    }
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(corpus.records().size());
  RecordProperty("accuracy", std::to_string(acc));
  EXPECT_GE(acc, 0.9) << correct << " / " << corpus.records().size();
}

TEST(Langid, ShortEnglishCommandsWithoutCommonWords) {
  // none of these contain "the", which used to hand them to fr/pcm/de
  for (const char *t : {"Rotate left 90 degrees.", "Describe your surroundings.",
                        "Report your current position and orientation.", "Move backward 1 meter at 0.3 m/s."}) {
    EXPECT_EQ(detect_language(t, profiles()).code, "en") << t;
  }
}

TEST(LanguageState, OverrideBypassesDetection) {
  SessionLanguageState st;
  st.set_override(make_tag("fr", text::Script::Latin), 10);
  const auto history_before = st.history;
  const auto out = resolve_session_language(st, make_tag("en", text::Script::Latin), 20);
  EXPECT_EQ(out.code, "fr");
  EXPECT_EQ(out.confidence, 1.0);
  EXPECT_EQ(st.current.code, "fr");
  EXPECT_EQ(st.history.size(), history_before.size());
}

TEST(LanguageState, DetectedFixedPointAndGrowth) {
  SessionLanguageState st;
  st.current = make_tag("en", text::Script::Latin);
  EXPECT_EQ(resolve_session_language(st, make_tag("en", text::Script::Latin), 1).code, "en");
  const auto n = st.history.size();
  EXPECT_EQ(resolve_session_language(st, make_tag("ig", text::Script::Latin), 2).code, "ig");
  EXPECT_EQ(st.history.size(), n + 1);
  EXPECT_EQ(st.current.code, "ig");
}

TEST(LanguageState, ClearOverrideResumesDetection) {
  SessionLanguageState st;
  st.set_override(make_tag("fr", text::Script::Latin), 1);
  st.clear_override();
  EXPECT_EQ(resolve_session_language(st, make_tag("de", text::Script::Latin), 2).code, "de");
}

TEST(LanguageState, NamesAndScripts) {
  EXPECT_EQ(language_name("de"), "German");
  EXPECT_EQ(language_name("pcm"), "Nigerian Pidgin");
  EXPECT_EQ(language_name("xx"), "xx");
  EXPECT_EQ(default_script("ru"), text::Script::Cyrillic);
}
