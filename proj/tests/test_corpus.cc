#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "driftforge/corpus.h"
#include "driftforge/error.h"
#include "driftforge/random.h"

namespace df = driftforge;

namespace {

df::Document doc(std::string id, int year, std::vector<std::string> labels = {"a"}) {
  return {std::move(id), "some text", year, std::move(labels)};
}

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(Corpus, LoadsThreeLineFile) {
  const df::Corpus c = df::load_corpus(std::string(DRIFTFORGE_TEST_DATA) + "/corpus_small.jsonl");
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.docs()[2].id, "c");
  EXPECT_EQ(c.docs()[2].labels, (std::vector<std::string>{"E11", "I10"}));
  EXPECT_EQ(c.labels(), (std::vector<std::string>{"E11", "I10", "I21"}));
}

TEST(Corpus, MissingLabelsIsParseErrorWithLine) {
  const std::string jsonl =
      "{\"id\":\"a\",\"text\":\"x\",\"year\":2000,\"labels\":[]}\n"
      "{\"id\":\"b\",\"text\":\"y\",\"year\":2001}\n";
  try {
    df::parse_corpus(jsonl);
    FAIL() << "expected ParseError";
  } catch (const df::ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("labels"), std::string::npos);
  }
}

TEST(Corpus, DuplicateIdRejected) {
  const std::string jsonl =
      "{\"id\":\"a\",\"text\":\"x\",\"year\":2000,\"labels\":[\"l\"]}\n"
      "{\"id\":\"a\",\"text\":\"y\",\"year\":2001,\"labels\":[\"l\"]}\n";
  EXPECT_THROW(df::parse_corpus(jsonl), df::ValidationError);
}

TEST(Corpus, UnknownLabelAndEmptyTextRejected) {
  df::LoadOptions opt;
  opt.label_vocab = std::vector<std::string>{"l"};
  EXPECT_THROW(df::parse_corpus("{\"id\":\"a\",\"text\":\"x\",\"year\":1,\"labels\":[\"m\"]}\n", opt),
               df::ValidationError);
  EXPECT_THROW(df::parse_corpus("{\"id\":\"a\",\"text\":\"\",\"year\":1,\"labels\":[\"l\"]}\n"),
               df::ValidationError);
  EXPECT_THROW(df::parse_corpus("{\"id\":\"a\",\"text\":\"x\",\"year\":\"1999\",\"labels\":[]}\n"),
               df::ParseError);
  EXPECT_THROW(df::parse_corpus("not json\n"), df::ParseError);
}

TEST(Corpus, MetaLineSkippedAndWriteRoundTrips) {
  const auto path = testing::TempDir() + "/rt.jsonl";
  std::vector<df::Document> docs{doc("x", 2001, {"a", "b"}), doc("y", 2002)};
  df::write_corpus(path, docs, "{\"meta\":{\"seed\":7}}");
  const df::Corpus c = df::load_corpus(path);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.docs()[0].labels, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(c.docs()[1].year, 2002);
  EXPECT_THROW(df::load_corpus(testing::TempDir() + "/does-not-exist.jsonl"), df::IoError);
}

TEST(Partition, OneDocPerTable9Bucket) {
  df::Corpus c({doc("a", 2008), doc("b", 2012), doc("c", 2018)}, {"a"});
  df::TimePartition p;
  p.intervals = {df::parse_year_range("2008-2010"), df::parse_year_range("2011-2016"),
                 df::parse_year_range("2017-2019")};
  p.target_index = 2;
  const auto r = df::partition_by_time(c, p);
  ASSERT_EQ(r.buckets.size(), 3u);
  EXPECT_EQ(r.buckets[0], std::vector<std::string>{"a"});
  EXPECT_EQ(r.buckets[1], std::vector<std::string>{"b"});
  EXPECT_EQ(r.buckets[2], std::vector<std::string>{"c"});
  EXPECT_TRUE(r.dropped.empty());
}

TEST(Partition, OutOfRangeDroppedOrStrictError) {
  df::Corpus c({doc("a", 2008), doc("z", 2025)}, {"a"});
  df::TimePartition p;
  p.intervals = {df::parse_year_range("2008-2010"), df::parse_year_range("2017-2019")};
  const auto r = df::partition_by_time(c, p);
  EXPECT_EQ(r.dropped, std::vector<std::string>{"z"});
  p.strict = true;
  EXPECT_THROW(df::partition_by_time(c, p), df::ValidationError);
}

TEST(Partition, InvalidPartitionsRejected) {
  df::TimePartition p;
  p.intervals = {df::parse_year_range("2008-2012"), df::parse_year_range("2011-2016")};
  EXPECT_THROW(p.validate(), df::ConfigError);
  p.intervals = {df::parse_year_range("2008-2010"), df::parse_year_range("2011-2016")};
  p.source_index = 1;
  p.target_index = 0;
  EXPECT_THROW(p.validate(), df::ConfigError);
  EXPECT_THROW(df::parse_year_range("abc"), df::ConfigError);
  EXPECT_THROW(df::parse_year_range("2012-2010"), df::ConfigError);
  const auto single = df::parse_year_range("2010");
  EXPECT_EQ(single.begin, 2010);
  EXPECT_EQ(single.end, 2011);
}

TEST(Partition, BucketsDisjointAndCoverCorpus) {
  df::Rng rng(3);
  std::vector<df::Document> docs;
  for (int i = 0; i < 300; ++i) {
    docs.push_back(doc("d" + std::to_string(i), 2000 + static_cast<int>(rng.uniform_index(30))));
  }
  df::Corpus c(docs, {"a"});
  df::TimePartition p;
  p.intervals = {{2001, 2005}, {2005, 2011}, {2015, 2020}, {2020, 2029}};
  const auto r = df::partition_by_time(c, p);
  std::multiset<std::string> seen(r.dropped.begin(), r.dropped.end());
  for (const auto& b : r.buckets) seen.insert(b.begin(), b.end());
  EXPECT_EQ(seen.size(), c.size());
  EXPECT_EQ(std::set<std::string>(seen.begin(), seen.end()).size(), c.size());
  for (std::size_t i = 0; i < r.buckets.size(); ++i) {
    for (const auto& id : r.buckets[i]) EXPECT_TRUE(p.intervals[i].contains(c.at(id).year));
  }
}

TEST(Split, TenIdsSevenThree) {
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("id" + std::to_string(i));
  const auto s = df::split_train_test(ids, 0.7, 42);
  EXPECT_EQ(s.train_ids.size(), 7u);
  EXPECT_EQ(s.test_ids.size(), 3u);
  const auto again = df::split_train_test(ids, 0.7, 42);
  EXPECT_EQ(s.train_ids, again.train_ids);
  EXPECT_EQ(s.test_ids, again.test_ids);
}

TEST(Split, ThousandIdsDisjointCovering) {
  std::vector<std::string> ids;
  for (int i = 0; i < 1000; ++i) ids.push_back("doc-" + std::to_string(i));
  const auto s = df::split_train_test(ids, 0.7, 1);
  EXPECT_EQ(s.train_ids.size(), 700u);
  EXPECT_EQ(s.test_ids.size(), 300u);
  std::set<std::string> train(s.train_ids.begin(), s.train_ids.end());
  std::set<std::string> all(train);
  for (const auto& id : s.test_ids) {
    EXPECT_EQ(train.count(id), 0u);
    all.insert(id);
  }
  EXPECT_EQ(all, std::set<std::string>(ids.begin(), ids.end()));
}

TEST(Split, RoundsHalfUp) {
  const std::vector<std::string> ids{"a", "b", "c", "d", "e"};
  EXPECT_EQ(df::split_train_test(ids, 0.5, 0).train_ids.size(), 3u);  // 2.5 -> 3
  EXPECT_EQ(df::split_train_test(ids, 0.3, 0).train_ids.size(), 2u);  // 1.5 -> 2
}

TEST(Split, IndependentOfInputOrder) {
  std::vector<std::string> ids;
  for (int i = 0; i < 57; ++i) ids.push_back("x" + std::to_string(i * 7 % 57));
  std::vector<std::string> shuffled = ids;
  df::Rng rng(11);
  rng.shuffle(shuffled);
  const auto a = df::split_train_test(ids, 0.7, 9);
  const auto b = df::split_train_test(shuffled, 0.7, 9);
  EXPECT_EQ(sorted(a.train_ids), sorted(b.train_ids));
  EXPECT_EQ(sorted(a.test_ids), sorted(b.test_ids));
  EXPECT_NE(sorted(a.train_ids), sorted(df::split_train_test(ids, 0.7, 10).train_ids));
}

TEST(Split, Errors) {
  EXPECT_THROW(df::split_train_test({}, 0.7, 1), df::ValidationError);
  EXPECT_THROW(df::split_train_test({"a"}, 1.0, 1), df::ConfigError);
  EXPECT_THROW(df::split_train_test({"a"}, 0.0, 1), df::ConfigError);
}
