#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "driftforge/error.h"
#include "driftforge/random.h"
#include "driftforge/retrieval.h"

namespace df = driftforge;

namespace {

df::EmbeddingMatrix random_rows(const std::string& prefix, std::size_t n, std::size_t d,
                                std::uint64_t seed) {
  df::Rng rng(seed);
  std::vector<std::string> ids;
  std::vector<float> v;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back(prefix + std::to_string(i));
    for (std::size_t j = 0; j < d; ++j) v.push_back(static_cast<float>(rng.normal()));
  }
  return df::EmbeddingMatrix(ids, d, v);
}

// Every source scored in long double, fully sorted, first k kept.
std::vector<df::Neighbor> full_sort_oracle(std::span<const float> q, const df::EmbeddingMatrix& src,
                                           std::size_t k) {
  std::vector<std::pair<long double, std::string>> all;
  for (std::size_t i = 0; i < src.rows(); ++i) {
    long double dot = 0, na = 0, nb = 0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      dot += static_cast<long double>(q[j]) * src.row(i)[j];
      na += static_cast<long double>(q[j]) * q[j];
      nb += static_cast<long double>(src.row(i)[j]) * src.row(i)[j];
    }
    all.emplace_back(dot / std::sqrt(na * nb), src.ids()[i]);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<df::Neighbor> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) {
    out.push_back({all[i].second, static_cast<double>(all[i].first)});
  }
  return out;
}

}  // namespace

TEST(Cosine, Examples) {
  const std::vector<float> a{1, 2, 3}, x{1, 0}, y{0, 1}, xy{1, 1}, z{0, 0};
  EXPECT_NEAR(df::cosine_sim(a, a), 1.0, 1e-15);
  EXPECT_EQ(df::cosine_sim(x, y), 0.0);
  EXPECT_NEAR(df::cosine_sim(xy, x), 0.70711, 1e-5);
  EXPECT_NEAR(df::cosine_sim(xy, x), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_THROW(df::cosine_sim(z, x), df::ValidationError);
  EXPECT_THROW(df::cosine_sim(a, x), df::ValidationError);
}

TEST(Retrieve, TargetEqualToSourceRowComesFirst) {
  const auto src = random_rows("s", 30, 8, 1);
  const df::EmbeddingMatrix tgt(src.select({"s17"}));
  const auto r = df::retrieve_topk({"s17"}, tgt, src, 3);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].neighbors[0].source_id, "s17");
  EXPECT_NEAR(r[0].neighbors[0].similarity, 1.0, 1e-12);
  EXPECT_EQ(r[0].neighbors.size(), 3u);
}

TEST(Retrieve, KBeyondSourceReturnsAllSorted) {
  const auto src = random_rows("s", 7, 3, 2);
  const auto tgt = random_rows("t", 2, 3, 3);
  for (std::size_t k : {7u, 50u}) {
    const auto r = df::retrieve_topk({"t0", "t1"}, tgt, src, k);
    for (const auto& res : r) {
      ASSERT_EQ(res.neighbors.size(), 7u);
      for (std::size_t i = 1; i < 7; ++i) {
        EXPECT_GE(res.neighbors[i - 1].similarity, res.neighbors[i].similarity);
      }
    }
  }
}

TEST(Retrieve, TiesBrokenByAscendingId) {
  const df::EmbeddingMatrix src({"c", "a", "b", "d"}, 2, {1, 0, 2, 0, 3, 0, 0, 1});
  const df::EmbeddingMatrix tgt({"t"}, 2, {5, 0});
  const auto r = df::retrieve_topk({"t"}, tgt, src, 2);
  EXPECT_EQ(r[0].neighbors[0].source_id, "a");
  EXPECT_EQ(r[0].neighbors[1].source_id, "b");
}

TEST(Retrieve, MatchesFullSortOracle) {
  const auto src = random_rows("s", 1000, 16, 10);
  const auto tgt = random_rows("t", 50, 16, 11);
  const auto r = df::retrieve_topk(tgt.ids(), tgt, src, 3);
  ASSERT_EQ(r.size(), 50u);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto want = full_sort_oracle(tgt.row(i), src, 3);
    ASSERT_EQ(r[i].neighbors.size(), 3u);
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_EQ(r[i].neighbors[j].source_id, want[j].source_id);
      EXPECT_NEAR(r[i].neighbors[j].similarity, want[j].similarity, 1e-12);
    }
  }
}

TEST(Retrieve, PositiveRowScalingChangesNothing) {
  const auto src = random_rows("s", 200, 6, 20);
  const auto tgt = random_rows("t", 20, 6, 21);
  df::Rng rng(22);
  auto scale = [&](const df::EmbeddingMatrix& m) {
    std::vector<float> v = m.values();
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const float c = static_cast<float>(0.01 + rng.uniform01() * 100);
      for (std::size_t j = 0; j < m.dim(); ++j) v[i * m.dim() + j] *= c;
    }
    return df::EmbeddingMatrix(m.ids(), m.dim(), v);
  };
  const auto a = df::retrieve_topk(tgt.ids(), tgt, src, 5);
  const auto b = df::retrieve_topk(tgt.ids(), scale(tgt), scale(src), 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_EQ(a[i].neighbors[j].source_id, b[i].neighbors[j].source_id);
      EXPECT_NEAR(a[i].neighbors[j].similarity, b[i].neighbors[j].similarity, 1e-6);
    }
  }
}

TEST(Retrieve, TopKIsPrefixOfFullList) {
  const auto src = random_rows("s", 80, 4, 30);
  const auto tgt = random_rows("t", 5, 4, 31);
  const auto full = df::retrieve_topk(tgt.ids(), tgt, src, 80);
  for (std::size_t k = 1; k <= 6; ++k) {
    const auto part = df::retrieve_topk(tgt.ids(), tgt, src, k);
    for (std::size_t i = 0; i < part.size(); ++i) {
      EXPECT_EQ(part[i].neighbors,
                std::vector<df::Neighbor>(full[i].neighbors.begin(), full[i].neighbors.begin() + k));
    }
  }
}

TEST(Retrieve, Errors) {
  const auto src = random_rows("s", 3, 2, 1);
  const auto tgt = random_rows("t", 1, 2, 2);
  EXPECT_THROW(df::retrieve_topk({"t0"}, tgt, df::EmbeddingMatrix(), 3), df::ValidationError);
  EXPECT_THROW(df::retrieve_topk({"t0"}, tgt, src, 0), df::ConfigError);
  EXPECT_THROW(df::retrieve_topk({"nope"}, tgt, src, 1), df::ValidationError);
  EXPECT_THROW(df::retrieve_topk({"t0"}, random_rows("t", 1, 3, 2), src, 1), df::ValidationError);
  EXPECT_TRUE(df::retrieve_topk({}, tgt, src, 2).empty());
}

TEST(Retrieve, JsonlRoundTrip) {
  const auto src = random_rows("s", 40, 5, 41);
  const auto tgt = random_rows("t", 6, 5, 42);
  const auto r = df::retrieve_topk(tgt.ids(), tgt, src, 3);
  const auto text = df::retrievals_to_jsonl(r, R"({"meta":{"seed":1}})");
  EXPECT_EQ(text.substr(0, 8), "{\"meta\":");
  EXPECT_EQ(df::retrievals_from_jsonl(text), r);
  EXPECT_THROW(df::retrievals_from_jsonl("{\"target_id\":\"x\"}\n"), df::ParseError);
}
