#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "driftforge/error.h"
#include "driftforge/matrix_io.h"
#include "driftforge/random.h"

namespace df = driftforge;

namespace {

df::IdMatrix random_matrix(std::size_t n, std::size_t cols, std::uint64_t seed) {
  df::Rng rng(seed);
  std::vector<std::string> ids;
  std::vector<float> v;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back("doc-" + std::to_string(rng.uniform_index(1000000)) + "-" + std::to_string(i));
    for (std::size_t j = 0; j < cols; ++j) v.push_back(static_cast<float>(rng.normal() * 10));
  }
  return df::IdMatrix(ids, cols, v);
}

}  // namespace

TEST(MatrixIo, ByteLayoutIsFixed) {
  const df::IdMatrix m({"a", "bc"}, 2, {1.0f, -2.0f, 0.5f, 3.0f});
  const std::string bytes = df::encode_matrix(m, df::kEmbeddingMagic);
  ASSERT_EQ(bytes.size(), 6u + 8 + 16 + (4 + 1) + (4 + 2));
  EXPECT_EQ(bytes.substr(0, 6), "DFEMB1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[6]), 2);  // n, little-endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[10]), 2);  // cols
  float second;
  std::memcpy(&second, bytes.data() + 14 + 4, 4);
  EXPECT_EQ(second, -2.0f);
  EXPECT_EQ(bytes.substr(30, 5), std::string("\x01\0\0\0a", 5));
  EXPECT_EQ(bytes.substr(35), std::string("\x02\0\0\0bc", 6));
}

TEST(MatrixIo, RoundTripRandomShapes) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto m = random_matrix(s * 7 % 40, 1 + s % 9, s);
    EXPECT_EQ(df::decode_matrix(df::encode_matrix(m, df::kLogitMagic), df::kLogitMagic), m);
  }
}

TEST(MatrixIo, FilesRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "df_matrix_io";
  std::filesystem::create_directories(dir);
  const df::EmbeddingMatrix e(random_matrix(12, 5, 3));
  df::write_embeddings((dir / "x.dfemb").string(), e);
  EXPECT_EQ(df::read_embeddings((dir / "x.dfemb").string()), e);
  const df::LogitMatrix l(random_matrix(4, 3, 4));
  df::write_logits((dir / "x.dflgt").string(), l);
  EXPECT_EQ(df::read_logits((dir / "x.dflgt").string()), l);
  // the two formats are not interchangeable
  EXPECT_THROW(df::read_logits((dir / "x.dfemb").string()), df::ParseError);
  EXPECT_THROW(df::read_embeddings((dir / "missing.dfemb").string()), df::IoError);
}

TEST(MatrixIo, CorruptInputsRejected) {
  const std::string good = df::encode_matrix(random_matrix(3, 2, 1), df::kEmbeddingMagic);
  for (std::size_t cut = 0; cut < good.size(); ++cut) {
    EXPECT_THROW(df::decode_matrix(good.substr(0, cut), df::kEmbeddingMagic), df::ParseError) << cut;
  }
  EXPECT_THROW(df::decode_matrix(good + "x", df::kEmbeddingMagic), df::ParseError);
  std::string nan = good;
  const float q = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan.data() + 14, &q, 4);
  EXPECT_THROW(df::decode_matrix(nan, df::kEmbeddingMagic), df::ValidationError);
}

TEST(MatrixIo, SelectAndIndex) {
  const df::IdMatrix m({"a", "b", "c"}, 1, {1, 2, 3});
  const auto s = m.select({"c", "a"});
  EXPECT_EQ(s.ids(), (std::vector<std::string>{"c", "a"}));
  EXPECT_EQ(s.values(), (std::vector<float>{3, 1}));
  EXPECT_EQ(m.index_of("b"), 1u);
  EXPECT_THROW(m.index_of("z"), df::ValidationError);
  EXPECT_THROW(m.select({"z"}), df::ValidationError);
  EXPECT_THROW(df::IdMatrix({"a"}, 2, {1}), df::ValidationError);
}
