#include <gtest/gtest.h>

#include "driftforge/text.h"

namespace text = driftforge::text;

TEST(Text, NormalizeCollapsesCaseSpaceAndEdgePunctuation) {
  EXPECT_EQ(text::normalize_term("  Heart   Attack. "), "heart attack");
  EXPECT_EQ(text::normalize_term("(Myocardial\tInfarction)"), "myocardial infarction");
  EXPECT_EQ(text::normalize_term("..."), "");
  EXPECT_EQ(text::normalize_term(""), "");
}

TEST(Text, NormalizeAppliesNfc) {
  // "é" precomposed vs e + combining acute
  EXPECT_EQ(text::normalize_term("Caf\xC3\xA9"), text::normalize_term("Cafe\xCC\x81"));
  EXPECT_EQ(text::normalize_term("\xC3\x89TAT"), "\xC3\xA9tat");
}

TEST(Text, SegmentCoversInputWithWordSpaceSymbolUnits) {
  const std::string s = "Heart-attack, 2x!";
  const auto units = text::segment(s);
  std::size_t pos = 0;
  for (const auto& u : units) {
    EXPECT_EQ(u.begin, pos);
    EXPECT_GT(u.end, u.begin);
    pos = u.end;
  }
  EXPECT_EQ(pos, s.size());
  ASSERT_GE(units.size(), 3u);
  EXPECT_EQ(units[0].kind, text::UnitKind::kWord);
  EXPECT_EQ(units[0].norm, "heart");
  EXPECT_EQ(units[1].kind, text::UnitKind::kSymbol);
  EXPECT_EQ(units[2].norm, "attack");
}

TEST(Text, CombiningMarkStaysInsideWord) {
  const auto units = text::segment("cafe\xCC\x81 bar");
  ASSERT_EQ(units.size(), 3u);
  EXPECT_EQ(units[0].norm, "caf\xC3\xA9");
}

TEST(Text, CasePatternRoundTrip) {
  EXPECT_EQ(text::case_pattern("heart attack"), text::CasePattern::kLower);
  EXPECT_EQ(text::case_pattern("Heart attack"), text::CasePattern::kSentence);
  EXPECT_EQ(text::case_pattern("Heart Attack"), text::CasePattern::kTitle);
  EXPECT_EQ(text::case_pattern("Type 2 Diabetes"), text::CasePattern::kTitle);
  EXPECT_EQ(text::case_pattern("A"), text::CasePattern::kSentence);
  EXPECT_EQ(text::case_pattern("HEART ATTACK"), text::CasePattern::kUpper);
  EXPECT_EQ(text::case_pattern("hEart"), text::CasePattern::kMixed);
  EXPECT_EQ(text::apply_case("myocardial infarction", text::CasePattern::kSentence),
            "Myocardial infarction");
  EXPECT_EQ(text::apply_case("myocardial infarction", text::CasePattern::kTitle),
            "Myocardial Infarction");
  EXPECT_EQ(text::apply_case("non-small cell carcinoma", text::CasePattern::kTitle),
            "Non-Small Cell Carcinoma");
  EXPECT_EQ(text::apply_case("Crohn disease", text::CasePattern::kMixed), "Crohn disease");
  EXPECT_EQ(text::apply_case("myocardial infarction", text::CasePattern::kUpper),
            "MYOCARDIAL INFARCTION");
  EXPECT_EQ(text::apply_case("mi", text::CasePattern::kLower), "mi");
}
