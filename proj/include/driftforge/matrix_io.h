#ifndef DRIFTFORGE_MATRIX_IO_H_
#define DRIFTFORGE_MATRIX_IO_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace driftforge {

// Row-major float32 matrix with one document id per row. Shared layout of
// the embedding and logit files exchanged with the trainer bridge:
//
//   magic (6 bytes) | u32 n | u32 cols | n*cols f32 | n x (u32 len, bytes)
//
// All integers and floats little-endian.
class IdMatrix {
 public:
  IdMatrix() = default;
  IdMatrix(std::vector<std::string> ids, std::size_t cols,
           std::vector<float> values);

  std::size_t rows() const { return ids_.size(); }
  std::size_t cols() const { return cols_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<float>& values() const { return values_; }

  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<float> row(std::size_t i) {
    return {values_.data() + i * cols_, cols_};
  }

  // Row index for an id; throws ValidationError when absent.
  std::size_t index_of(const std::string& id) const;
  IdMatrix select(const std::vector<std::string>& ids) const;

  bool operator==(const IdMatrix&) const = default;

 private:
  std::vector<std::string> ids_;
  std::size_t cols_ = 0;
  std::vector<float> values_;
};

// E(x): one embedding per document.
struct EmbeddingMatrix : IdMatrix {
  using IdMatrix::IdMatrix;
  explicit EmbeddingMatrix(IdMatrix m) : IdMatrix(std::move(m)) {}
  std::size_t dim() const { return cols(); }
};

// z_l(x): pre-sigmoid per-label scores, columns in label-vocabulary order.
struct LogitMatrix : IdMatrix {
  using IdMatrix::IdMatrix;
  explicit LogitMatrix(IdMatrix m) : IdMatrix(std::move(m)) {}
  std::size_t labels() const { return cols(); }
};

inline constexpr std::string_view kEmbeddingMagic = "DFEMB1";
inline constexpr std::string_view kLogitMagic = "DFLGT1";

std::string encode_matrix(const IdMatrix& m, std::string_view magic);
IdMatrix decode_matrix(std::string_view bytes, std::string_view magic);

void write_embeddings(const std::string& path, const EmbeddingMatrix& m);
EmbeddingMatrix read_embeddings(const std::string& path);
void write_logits(const std::string& path, const LogitMatrix& m);
LogitMatrix read_logits(const std::string& path);

namespace le {
void put_u32(std::string& out, std::uint32_t v);
void put_f32(std::string& out, float v);
void put_f64(std::string& out, double v);
void put_string(std::string& out, std::string_view s);

// Bounds-checked little-endian reader; throws ParseError on truncation.
class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::uint32_t u32();
  float f32();
  double f64();
  std::string string();
  std::string_view raw(std::size_t n);
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};
}  // namespace le

std::string read_binary_file(const std::string& path);
void write_binary_file(const std::string& path, std::string_view bytes);

}  // namespace driftforge

#endif  // DRIFTFORGE_MATRIX_IO_H_
