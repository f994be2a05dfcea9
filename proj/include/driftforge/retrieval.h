#ifndef DRIFTFORGE_RETRIEVAL_H_
#define DRIFTFORGE_RETRIEVAL_H_

#include <span>
#include <string>
#include <vector>

#include "driftforge/matrix_io.h"

namespace driftforge {

struct Neighbor {
  std::string source_id;
  double similarity = 0.0;

  bool operator==(const Neighbor&) const = default;
};

struct RetrievalResult {
  std::string target_id;
  std::vector<Neighbor> neighbors;  // similarity non-increasing, ties by id

  bool operator==(const RetrievalResult&) const = default;
};

// dot(a, b) / (|a| |b|). Throws ValidationError for a zero vector or a
// dimension mismatch.
double cosine_sim(std::span<const float> a, std::span<const float> b);

// Exact top-k over every source row. Returns all sources, ordered, when k
// exceeds the source count.
class CosineIndex {
 public:
  explicit CosineIndex(const EmbeddingMatrix& source);

  std::vector<Neighbor> search(std::span<const float> query, std::size_t k) const;
  std::size_t size() const { return ids_.size(); }

 private:
  std::vector<std::string> ids_;
  std::size_t dim_;
  std::vector<double> unit_rows_;  // rows scaled to unit length
};

// Retrieves for each listed target (rows looked up by id in target_emb).
std::vector<RetrievalResult> retrieve_topk(const std::vector<std::string>& target_ids,
                                           const EmbeddingMatrix& target_emb,
                                           const EmbeddingMatrix& source_emb,
                                           std::size_t k);

std::string retrievals_to_jsonl(const std::vector<RetrievalResult>& results,
                                const std::string& meta_json = "");
std::vector<RetrievalResult> retrievals_from_jsonl(const std::string& content);

}  // namespace driftforge

#endif  // DRIFTFORGE_RETRIEVAL_H_
