#ifndef DRIFTFORGE_STATS_H_
#define DRIFTFORGE_STATS_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "driftforge/corpus.h"
#include "driftforge/lexicon.h"
#include "driftforge/matrix_io.h"

namespace driftforge {

inline constexpr double kDefaultShrinkage = 0.1;
inline constexpr double kDefaultEpsilon = 1e-12;

// Source-period embedding statistics behind the feature-shift score.
class SourceFeatureStats {
 public:
  // Builds from a (regularized) covariance; factors it. Throws NumericError
  // when sigma is not symmetric positive definite.
  SourceFeatureStats(Eigen::VectorXd mu, Eigen::MatrixXd sigma, double d_min,
                     double d_max, double epsilon, double shrinkage);

  std::size_t dim() const { return static_cast<std::size_t>(mu_.size()); }
  const Eigen::VectorXd& mu() const { return mu_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  // Lower-triangular L with sigma = L L^T.
  const Eigen::MatrixXd& sigma_chol() const { return chol_; }
  double d_min() const { return d_min_; }
  double d_max() const { return d_max_; }
  double epsilon() const { return epsilon_; }
  double shrinkage() const { return shrinkage_; }

  void set_range(double d_min, double d_max);

 private:
  Eigen::VectorXd mu_;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd chol_;
  double d_min_;
  double d_max_;
  double epsilon_;
  double shrinkage_;
};

// Mean, shrunk sample covariance (1-l)*S + l*tr(S)/d*I, and the range of
// Mahalanobis distances over the source rows themselves. Requires n >= 2.
SourceFeatureStats fit_feature_stats(const EmbeddingMatrix& source,
                                     double shrinkage = kDefaultShrinkage,
                                     double epsilon = kDefaultEpsilon);

// sqrt((x - mu)^T sigma^-1 (x - mu)) through a triangular solve.
double mahalanobis(std::span<const float> x, const SourceFeatureStats& stats);
double mahalanobis(const Eigen::VectorXd& x, const SourceFeatureStats& stats);

// Source document frequencies of lexicon concepts.
struct ConceptStats {
  std::size_t n_docs = 0;
  std::map<std::string, std::size_t> freq;  // concept id -> document frequency
  double epsilon = kDefaultEpsilon;

  std::size_t frequency(const std::string& concept_id) const {
    auto it = freq.find(concept_id);
    return it == freq.end() ? 0 : it->second;
  }
};

ConceptStats fit_concept_stats(const std::vector<Document>& source_docs,
                               const ConceptMatcher& matcher,
                               double epsilon = kDefaultEpsilon);

// -ln(f/N + eps). Unseen concepts score -ln(eps), the maximum.
double surprisal(const std::string& concept_id, const ConceptStats& stats);

struct SourceStats {
  std::optional<SourceFeatureStats> feature;
  std::optional<ConceptStats> concepts;
  std::string meta;  // free-form provenance (JSON), may be empty
};

// Binary sidecar: "DFSTA1", then little-endian sections (see stats.cc).
std::string encode_stats(const SourceStats& stats);
SourceStats decode_stats(std::string_view bytes);
void write_stats(const std::string& path, const SourceStats& stats);
SourceStats read_stats(const std::string& path);

}  // namespace driftforge

#endif  // DRIFTFORGE_STATS_H_
