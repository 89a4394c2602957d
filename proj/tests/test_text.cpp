#include "babelbot/text.hpp"

#include <gtest/gtest.h>

using namespace babelbot::text;

TEST(Text, DecodeEncodeRoundTrip) {
  const std::string s = "Grüße, 你好, привет, مرحبا, नमस्ते";
  EXPECT_EQ(encode(decode(s)), s);
}

TEST(Text, MalformedBytesBecomeReplacement) {
  const std::string bad = std::string("a") + char(0xC3) + "b";
  const auto cps = decode(bad);
  ASSERT_EQ(cps.size(), 3u);
  EXPECT_EQ(cps[1], char32_t(0xFFFD));
  EXPECT_EQ(decode(std::string(1, char(0xE4))), std::u32string(1, 0xFFFD));
}

TEST(Text, LowercaseAcrossScripts) {
  EXPECT_EQ(to_lower("ÄÖÜ Straße"), "äöü straße");
  EXPECT_EQ(to_lower("ПРИВЕТ Ёж"), "привет ёж");
  EXPECT_EQ(to_lower("ÉCOLE"), "école");
}

TEST(Text, ScriptDetection) {
  EXPECT_EQ(dominant_script(decode("hello")), Script::Latin);
  EXPECT_EQ(dominant_script(decode("向前移动")), Script::Han);
  EXPECT_EQ(dominant_script(decode("مرحبا")), Script::Arabic);
  EXPECT_EQ(dominant_script(decode("नमस्ते")), Script::Devanagari);
  EXPECT_EQ(dominant_script(decode("привет")), Script::Cyrillic);
  EXPECT_EQ(dominant_script(decode("12 34 !")), Script::Other);
  // Majority wins for mixed text.
  EXPECT_EQ(dominant_script(decode("以0.2米/秒 m/s")), Script::Han);
}

TEST(Text, ScriptNamesRoundTrip) {
  for (Script s : {Script::Latin, Script::Cyrillic, Script::Han, Script::Arabic, Script::Devanagari}) {
    EXPECT_EQ(script_from_string(to_string(s)), s);
  }
}

TEST(Text, DigitsIncludeIndicAndArabic) {
  EXPECT_TRUE(is_digit(U'7'));
  EXPECT_TRUE(is_digit(0x0663));
  EXPECT_TRUE(is_digit(0x0969));
  EXPECT_FALSE(is_letter(0x0663));
}

TEST(Text, TrimAndSplitLines) {
  EXPECT_EQ(trim("  a b \n"), "a b");
  const auto lines = split_lines("one\r\ntwo\n\nthree");
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "one");
  EXPECT_EQ(lines[2], "");
  EXPECT_EQ(lines[3], "three");
}
