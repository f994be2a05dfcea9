#include <gtest/gtest.h>

#include <cmath>

#include "driftforge/error.h"
#include "driftforge/lexicon.h"
#include "driftforge/random.h"
#include "driftforge/stats.h"

namespace df = driftforge;

namespace {

using Mat = std::vector<std::vector<double>>;

// Plain Gauss-Jordan with partial pivoting.
Mat invert(Mat a) {
  const std::size_t n = a.size();
  Mat inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    }
    std::swap(a[c], a[p]);
    std::swap(inv[c], inv[p]);
    const double d = a[c][c];
    for (std::size_t j = 0; j < n; ++j) {
      a[c][j] /= d;
      inv[c][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[c][j];
        inv[r][j] -= f * inv[c][j];
      }
    }
  }
  return inv;
}

struct NaiveStats {
  std::vector<double> mu;
  Mat sigma;
};

NaiveStats naive_fit(const df::EmbeddingMatrix& m, double lambda) {
  const std::size_t n = m.rows(), d = m.dim();
  NaiveStats s{std::vector<double>(d, 0.0), Mat(d, std::vector<double>(d, 0.0))};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) s.mu[j] += m.row(i)[j] / static_cast<double>(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) {
        s.sigma[a][b] += (m.row(i)[a] - s.mu[a]) * (m.row(i)[b] - s.mu[b]) / static_cast<double>(n - 1);
      }
    }
  }
  double tr = 0;
  for (std::size_t a = 0; a < d; ++a) tr += s.sigma[a][a];
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) s.sigma[a][b] *= (1 - lambda);
    s.sigma[a][a] += lambda * tr / static_cast<double>(d);
  }
  return s;
}

double naive_distance(std::span<const float> x, const NaiveStats& s, const Mat& inv) {
  const std::size_t d = s.mu.size();
  double q = 0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) q += (x[a] - s.mu[a]) * inv[a][b] * (x[b] - s.mu[b]);
  }
  return std::sqrt(q);
}

df::EmbeddingMatrix random_embeddings(std::size_t n, std::size_t d, std::uint64_t seed) {
  df::Rng rng(seed);
  std::vector<std::string> ids;
  std::vector<float> v;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back("r" + std::to_string(i));
    for (std::size_t j = 0; j < d; ++j) v.push_back(static_cast<float>(rng.normal() * (1.0 + j) + j));
  }
  return df::EmbeddingMatrix(ids, d, v);
}

df::SourceFeatureStats fixed_stats(std::vector<double> mu, std::vector<double> diag) {
  Eigen::VectorXd m = Eigen::Map<Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
  Eigen::MatrixXd s = Eigen::VectorXd::Map(diag.data(), static_cast<Eigen::Index>(diag.size())).asDiagonal();
  return df::SourceFeatureStats(m, s, 0.0, 1.0, 1e-12, 0.0);
}

}  // namespace

TEST(FeatureStats, FourPointCovariance) {
  const df::EmbeddingMatrix m({"a", "b", "c", "d"}, 2, {0, 0, 2, 0, 0, 2, 2, 2});
  const auto s = df::fit_feature_stats(m, 0.0);
  EXPECT_DOUBLE_EQ(s.mu()(0), 1.0);
  EXPECT_DOUBLE_EQ(s.mu()(1), 1.0);
  EXPECT_NEAR(s.sigma()(0, 0), 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.sigma()(1, 1), 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.sigma()(0, 1), 0.0, 1e-12);
  // every corner sits at the same distance sqrt(2 / (4/3))
  EXPECT_NEAR(s.d_min(), std::sqrt(1.5), 1e-12);
  EXPECT_NEAR(s.d_max(), std::sqrt(1.5), 1e-12);
}

TEST(FeatureStats, RepeatedRowNeedsShrinkage) {
  const df::EmbeddingMatrix m({"a", "b", "c"}, 2, {1, 2, 1, 2, 1, 2});
  EXPECT_THROW(df::fit_feature_stats(m, 0.0), df::NumericError);
  const auto s = df::fit_feature_stats(m, 0.1);
  EXPECT_NEAR(s.sigma()(0, 0), 0.1, 1e-15);
  EXPECT_EQ(s.d_min(), 0.0);
  EXPECT_EQ(s.d_max(), 0.0);
}

TEST(FeatureStats, TooFewRowsAndBadShrinkage) {
  EXPECT_THROW(df::fit_feature_stats(df::EmbeddingMatrix({"a"}, 2, {1, 2})), df::ValidationError);
  EXPECT_THROW(df::fit_feature_stats(random_embeddings(5, 2, 1), 1.5), df::ConfigError);
}

TEST(Mahalanobis, ClosedForms) {
  const auto id = fixed_stats({0, 0}, {1, 1});
  EXPECT_DOUBLE_EQ(df::mahalanobis(Eigen::Vector2d(3, 4), id), 5.0);
  EXPECT_DOUBLE_EQ(df::mahalanobis(Eigen::Vector2d(0, 0), id), 0.0);
  const auto diag = fixed_stats({0, 0}, {4, 1});
  EXPECT_NEAR(df::mahalanobis(Eigen::Vector2d(2, 1), diag), std::sqrt(2.0), 1e-15);
  const auto shifted = fixed_stats({1, -2, 3}, {2, 3, 5});
  EXPECT_DOUBLE_EQ(df::mahalanobis(Eigen::Vector3d(1, -2, 3), shifted), 0.0);
  EXPECT_THROW(df::mahalanobis(Eigen::Vector3d(0, 0, 0), id), df::ValidationError);
}

TEST(Mahalanobis, MatchesExplicitInverseOracle) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const std::size_t d = 1 + seed % 16;
    const auto m = random_embeddings(d + 5 + seed, d, seed);
    const double lambda = (seed % 3) * 0.1;
    if (lambda == 0.0 && m.rows() <= d) continue;
    const auto s = df::fit_feature_stats(m, lambda);
    const auto oracle = naive_fit(m, lambda);
    const Mat inv = invert(oracle.sigma);
    double lo = 1e300, hi = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double want = naive_distance(m.row(i), oracle, inv);
      EXPECT_NEAR(df::mahalanobis(m.row(i), s), want, 1e-8 * std::max(1.0, want));
      lo = std::min(lo, want);
      hi = std::max(hi, want);
    }
    EXPECT_NEAR(s.d_min(), lo, 1e-8 * std::max(1.0, lo));
    EXPECT_NEAR(s.d_max(), hi, 1e-8 * hi);
  }
}

TEST(FeatureStats, RowOrderInvariant) {
  const auto m = random_embeddings(40, 6, 11);
  std::vector<std::string> ids = m.ids();
  df::Rng rng(2);
  rng.shuffle(ids);
  const auto a = df::fit_feature_stats(m);
  const auto b = df::fit_feature_stats(df::EmbeddingMatrix(m.select(ids)));
  EXPECT_TRUE(a.mu().isApprox(b.mu(), 1e-12));
  EXPECT_TRUE(a.sigma().isApprox(b.sigma(), 1e-12));
  EXPECT_NEAR(a.d_max(), b.d_max(), 1e-10);
}

TEST(ConceptStats, FrequenciesAndSurprisal) {
  df::ConceptLexicon lex;
  lex.add("mi", "heart attack", {}, "x");
  lex.add("ht", "hypertension", {}, "x");
  const df::ConceptMatcher m(lex);
  std::vector<df::Document> docs;
  for (int i = 0; i < 100; ++i) {
    std::string text = "patient " + std::to_string(i);
    if (i < 10) text += " heart attack and another heart attack";
    if (i < 50) text += " hypertension";
    docs.push_back({"d" + std::to_string(i), text, 2000, {}});
  }
  const auto s = df::fit_concept_stats(docs, m);
  EXPECT_EQ(s.n_docs, 100u);
  EXPECT_EQ(s.frequency("mi"), 10u);  // document frequency, not occurrences
  EXPECT_EQ(s.frequency("ht"), 50u);
  EXPECT_NEAR(df::surprisal("mi", s), 2.302585, 1e-6);
  EXPECT_NEAR(df::surprisal("ht", s), std::log(2.0), 1e-9);
  EXPECT_NEAR(df::surprisal("unseen", s), 27.631021, 1e-6);
  EXPECT_THROW(df::fit_concept_stats({}, m), df::ValidationError);
}

TEST(ConceptStats, SurprisalFallsAsFrequencyGrows) {
  df::ConceptStats s;
  s.n_docs = 1000;
  for (std::size_t f = 0; f <= 1000; f += 50) s.freq["c" + std::to_string(f)] = f;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f <= 1000; f += 50) {
    const double v = df::surprisal("c" + std::to_string(f), s);
    EXPECT_LT(v, prev);
    EXPECT_GE(v, -1e-9);
    prev = v;
  }
}

TEST(StatsFile, RoundTripWithMeta) {
  df::SourceStats st;
  st.feature.emplace(df::fit_feature_stats(random_embeddings(20, 4, 5)));
  df::ConceptStats c;
  c.n_docs = 7;
  c.freq = {{"a", 3}, {"b", 7}};
  st.concepts = c;
  st.meta = R"({"meta":{"seed":7}})";
  const auto back = df::decode_stats(df::encode_stats(st));
  ASSERT_TRUE(back.feature && back.concepts);
  EXPECT_EQ(back.feature->mu(), st.feature->mu());
  EXPECT_EQ(back.feature->sigma(), st.feature->sigma());
  EXPECT_EQ(back.feature->d_max(), st.feature->d_max());
  EXPECT_EQ(back.concepts->freq, c.freq);
  EXPECT_EQ(back.meta, st.meta);

  df::SourceStats partial;
  partial.concepts = c;
  const auto p = df::decode_stats(df::encode_stats(partial));
  EXPECT_FALSE(p.feature);
  EXPECT_TRUE(p.meta.empty());
  EXPECT_THROW(df::decode_stats("DFSTA2"), df::ParseError);
  const auto bytes = df::encode_stats(st);
  EXPECT_THROW(df::decode_stats(bytes.substr(0, bytes.size() / 2)), df::ParseError);
}

// Every doc has the concept: -log(1 + eps) must keep its digits rather than
// round 1 + eps first.
TEST(ConceptStats, SurprisalOfUbiquitousConceptIsAccurate) {
  df::ConceptStats s;
  s.n_docs = 777;
  s.freq["all"] = 777;
  s.freq["most"] = 776;
  const double v = df::surprisal("all", s);
  EXPECT_NEAR(v / -1e-12, 1.0, 1e-10);
  EXPECT_NEAR(df::surprisal("most", s), -std::log1p(-1.0 / 777 + 1e-12), 1e-15);
}
