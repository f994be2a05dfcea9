#include "driftforge/retrieval.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "driftforge/error.h"
#include "driftforge/parallel.h"
#include "driftforge/text.h"
#include "json.hpp"

namespace driftforge {

using nlohmann::json;

double cosine_sim(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ValidationError("cosine of vectors with different dimensions");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ValidationError("cosine similarity undefined for a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

CosineIndex::CosineIndex(const EmbeddingMatrix& source)
    : ids_(source.ids()), dim_(source.dim()) {
  if (source.rows() == 0) throw ValidationError("source embedding set is empty");
  unit_rows_.resize(source.rows() * dim_);
  for (std::size_t i = 0; i < source.rows(); ++i) {
    const auto r = source.row(i);
    double norm = 0.0;
    for (float v : r) norm += static_cast<double>(v) * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      throw ValidationError("source embedding '" + ids_[i] + "' is a zero vector");
    }
    for (std::size_t j = 0; j < dim_; ++j) unit_rows_[i * dim_ + j] = r[j] / norm;
  }
}

std::vector<Neighbor> CosineIndex::search(std::span<const float> query,
                                          std::size_t k) const {
  if (query.size() != dim_) throw ValidationError("query dimension mismatch");
  if (k == 0) throw ConfigError("k must be at least 1");
  double qnorm = 0.0;
  for (float v : query) qnorm += static_cast<double>(v) * v;
  qnorm = std::sqrt(qnorm);
  if (qnorm == 0.0) throw ValidationError("cosine similarity undefined for a zero vector");
  std::vector<Neighbor> all(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const double* row = &unit_rows_[i * dim_];
    double dot = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) dot += row[j] * query[j];
    all[i] = {ids_[i], std::clamp(dot / qnorm, -1.0, 1.0)};
  }
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    [](const Neighbor& x, const Neighbor& y) {
                      if (x.similarity != y.similarity) return x.similarity > y.similarity;
                      return x.source_id < y.source_id;
                    });
  all.resize(k);
  return all;
}

std::vector<RetrievalResult> retrieve_topk(const std::vector<std::string>& target_ids,
                                           const EmbeddingMatrix& target_emb,
                                           const EmbeddingMatrix& source_emb,
                                           std::size_t k) {
  if (k == 0) throw ConfigError("k must be at least 1");
  const CosineIndex index(source_emb);
  if (target_emb.rows() > 0 && target_emb.dim() != source_emb.dim()) {
    throw ValidationError("target and source embeddings differ in dimension");
  }
  const IdMatrix targets = target_emb.select(target_ids);
  std::vector<RetrievalResult> out(target_ids.size());
  parallel_for(target_ids.size(), [&](std::size_t i) {
    out[i].target_id = target_ids[i];
    out[i].neighbors = index.search(targets.row(i), k);
  });
  return out;
}

std::string retrievals_to_jsonl(const std::vector<RetrievalResult>& results,
                                const std::string& meta_json) {
  std::string out;
  if (!meta_json.empty()) out += meta_json + "\n";
  for (const auto& r : results) {
    json neighbors = json::array();
    for (const auto& n : r.neighbors) {
      neighbors.push_back({{"source_id", n.source_id}, {"sim", n.similarity}});
    }
    out += json{{"target_id", r.target_id}, {"neighbors", neighbors}}.dump() + "\n";
  }
  return out;
}

std::vector<RetrievalResult> retrievals_from_jsonl(const std::string& content) {
  std::vector<RetrievalResult> out;
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    if (j.contains("meta")) continue;
    if (!j.contains("target_id") || !j.contains("neighbors")) {
      throw ParseError("retrieval record needs target_id and neighbors", lineno);
    }
    RetrievalResult r;
    r.target_id = j["target_id"].get<std::string>();
    for (const auto& n : j["neighbors"]) {
      r.neighbors.push_back({n.at("source_id").get<std::string>(), n.at("sim").get<double>()});
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace driftforge
