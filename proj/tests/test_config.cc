#include <gtest/gtest.h>

#include "driftforge/config.h"
#include "driftforge/error.h"

namespace df = driftforge;

TEST(Config, SectionsCommentsAndQuotes) {
  const auto c = df::KeyValueConfig::parse(
      "# top comment\n"
      "seed = 7\n"
      "\n"
      "[adapt]\n"
      "batch_size = 64   # trailing\n"
      "lexicon = \"dir/lex#1.json\"\n"
      "[shift]\n"
      "rho=0.2\n"
      "flag = yes\n");
  EXPECT_EQ(c.get_int("seed", 0), 7);
  EXPECT_EQ(c.get_int("adapt.batch_size", 0), 64);
  EXPECT_EQ(c.get_string("adapt.lexicon", ""), "dir/lex#1.json");
  EXPECT_DOUBLE_EQ(c.get_double("shift.rho", 0), 0.2);
  EXPECT_TRUE(c.get_bool("shift.flag", false));
  EXPECT_EQ(c.get_int("missing", 3), 3);
  EXPECT_FALSE(c.has("batch_size"));
}

TEST(Config, ParseErrorsCarryLine) {
  try {
    df::KeyValueConfig::parse("a = 1\nnot a pair\n");
    FAIL();
  } catch (const df::ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(df::KeyValueConfig::parse("[open\n"), df::ParseError);
  EXPECT_THROW(df::KeyValueConfig::parse("bad key = 1\n"), df::ParseError);
  EXPECT_THROW(df::KeyValueConfig::parse("a = \"open\n"), df::ParseError);
}

TEST(Config, TypedGettersRejectJunk) {
  auto c = df::KeyValueConfig::parse("n = 12x\nd = abc\nb = maybe\n");
  EXPECT_THROW(c.get_int("n", 0), df::ConfigError);
  EXPECT_THROW(c.get_double("d", 0), df::ConfigError);
  EXPECT_THROW(c.get_bool("b", false), df::ConfigError);
}

TEST(Config, HashIgnoresLayoutButNotValues) {
  const auto a = df::KeyValueConfig::parse("x = 1\n[s]\ny = 2\n");
  const auto b = df::KeyValueConfig::parse("# c\ns.y=2\n\nx =   1\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  auto c = a;
  c.set("x", "2");
  EXPECT_NE(a.hash(), c.hash());
}

TEST(Config, LoadMissingFileIsIoError) {
  EXPECT_THROW(df::KeyValueConfig::load("/nonexistent/cfg.toml"), df::IoError);
}
