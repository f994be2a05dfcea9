#include "driftforge/matrix_io.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "driftforge/error.h"

namespace driftforge {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

IdMatrix::IdMatrix(std::vector<std::string> ids, std::size_t cols,
                   std::vector<float> values)
    : ids_(std::move(ids)), cols_(cols), values_(std::move(values)) {
  if (values_.size() != ids_.size() * cols_) {
    throw ValidationError("matrix payload size does not match rows x cols");
  }
  for (float v : values_) {
    if (!std::isfinite(v)) throw ValidationError("matrix contains non-finite values");
  }
}

std::size_t IdMatrix::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == id) return i;
  }
  throw ValidationError("id '" + id + "' not present in matrix");
}

IdMatrix IdMatrix::select(const std::vector<std::string>& ids) const {
  std::unordered_map<std::string, std::size_t> pos;
  pos.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) pos.emplace(ids_[i], i);
  std::vector<float> values;
  values.reserve(ids.size() * cols_);
  for (const auto& id : ids) {
    auto it = pos.find(id);
    if (it == pos.end()) throw ValidationError("id '" + id + "' not present in matrix");
    const auto r = row(it->second);
    values.insert(values.end(), r.begin(), r.end());
  }
  return IdMatrix(ids, cols_, std::move(values));
}

namespace le {

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

void put_f32(std::string& out, float v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

void put_f64(std::string& out, double v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

void put_string(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

std::string_view Reader::raw(std::size_t n) {
  if (bytes_.size() - pos_ < n) throw ParseError("binary file truncated");
  auto v = bytes_.substr(pos_, n);
  pos_ += n;
  return v;
}

std::uint32_t Reader::u32() {
  std::uint32_t v;
  std::memcpy(&v, raw(4).data(), 4);
  return v;
}

float Reader::f32() {
  float v;
  std::memcpy(&v, raw(4).data(), 4);
  return v;
}

double Reader::f64() {
  double v;
  std::memcpy(&v, raw(8).data(), 8);
  return v;
}

std::string Reader::string() {
  const std::uint32_t n = u32();
  return std::string(raw(n));
}

}  // namespace le

std::string encode_matrix(const IdMatrix& m, std::string_view magic) {
  std::string out;
  out.reserve(magic.size() + 8 + m.values().size() * 4 + m.rows() * 16);
  out.append(magic);
  le::put_u32(out, static_cast<std::uint32_t>(m.rows()));
  le::put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (float v : m.values()) le::put_f32(out, v);
  for (const auto& id : m.ids()) le::put_string(out, id);
  return out;
}

IdMatrix decode_matrix(std::string_view bytes, std::string_view magic) {
  le::Reader r(bytes);
  if (r.raw(magic.size()) != magic) {
    throw ParseError("bad magic, expected " + std::string(magic));
  }
  const std::uint32_t n = r.u32();
  const std::uint32_t cols = r.u32();
  std::vector<float> values(static_cast<std::size_t>(n) * cols);
  const auto payload = r.raw(values.size() * 4);
  std::memcpy(values.data(), payload.data(), payload.size());
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) ids.push_back(r.string());
  if (!r.done()) throw ParseError("trailing bytes after id table");
  return IdMatrix(std::move(ids), cols, std::move(values));
}

std::string read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_binary_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_embeddings(const std::string& path, const EmbeddingMatrix& m) {
  write_binary_file(path, encode_matrix(m, kEmbeddingMagic));
}

EmbeddingMatrix read_embeddings(const std::string& path) {
  return EmbeddingMatrix(decode_matrix(read_binary_file(path), kEmbeddingMagic));
}

void write_logits(const std::string& path, const LogitMatrix& m) {
  write_binary_file(path, encode_matrix(m, kLogitMagic));
}

LogitMatrix read_logits(const std::string& path) {
  return LogitMatrix(decode_matrix(read_binary_file(path), kLogitMagic));
}

}  // namespace driftforge
