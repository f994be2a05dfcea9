#ifndef DRIFTFORGE_SHIFT_H_
#define DRIFTFORGE_SHIFT_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "driftforge/corpus.h"
#include "driftforge/lexicon.h"
#include "driftforge/matrix_io.h"
#include "driftforge/stats.h"

namespace driftforge {

struct ShiftConfig {
  double tau_p = 0.5;
  double tau_h = 0.25;
  double rho = 0.1;

  void validate() const;  // throws ConfigError
};

// Logits are clamped to this magnitude before the sigmoid.
inline constexpr double kLogitClamp = 30.0;

struct UncertaintyScore {
  double p_max = 0.0;
  double entropy = 0.0;  // mean binary entropy over labels, nats
  bool uncertain = false;
};

UncertaintyScore uncertainty(std::span<const float> logits,
                             const ShiftConfig& config);
std::vector<UncertaintyScore> uncertainty_scores(const LogitMatrix& logits,
                                                 const ShiftConfig& config);

// clip((d - d_min) / (d_max - d_min + eps), 0, 1)
double feature_score(double distance, const SourceFeatureStats& stats);
std::vector<double> feature_scores(const EmbeddingMatrix& embeddings,
                                   const SourceFeatureStats& stats);

struct OntologyScore {
  double o_tail = 0.0;
  std::size_t concept_count = 0;
  bool zero_concepts() const { return concept_count == 0; }
};

OntologyScore ontology_score(const std::vector<std::string>& concept_ids,
                             const ConceptStats& stats);
std::vector<OntologyScore> ontology_scores(const std::vector<Document>& docs,
                                           const ConceptMatcher& matcher,
                                           const ConceptStats& stats);

struct DocShiftScore {
  std::string id;
  double p_max = 0.0;
  double entropy = 0.0;
  bool uncertain = false;
  double feature = 0.0;
  double o_tail = 0.0;
  std::size_t concept_count = 0;
};

using ShiftScores = std::vector<DocShiftScore>;

// Zips per-signal outputs aligned with `ids`.
ShiftScores assemble_scores(const std::vector<std::string>& ids,
                            const std::vector<UncertaintyScore>& uncertainty,
                            const std::vector<double>& feature,
                            const std::vector<OntologyScore>& ontology);

// Sorted id sets.
struct ShiftSet {
  std::vector<std::string> uncertain;  // D_U
  std::vector<std::string> feature;    // D_F
  std::vector<std::string> ontology;   // D_O
  std::vector<std::string> shifted;    // D_U | D_F | D_O
};

// ceil(rho * n), tolerant of representation error in rho * n.
std::size_t top_count(double rho, std::size_t n);

// D_F / D_O are the top ceil(rho*n) documents by score, ties broken by
// ascending id. Zero-concept documents are not ranked for D_O.
ShiftSet detect(const ShiftScores& scores, const ShiftConfig& config);

struct OverlapReport {
  std::size_t n = 0;
  std::size_t u = 0, f = 0, o = 0;
  std::size_t u_o = 0, u_f = 0, o_f = 0, u_o_f = 0;
  std::size_t shifted = 0;

  double percent(std::size_t count) const {
    return n == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(n);
  }
  std::string to_csv() const;
  std::string to_table(const std::string& name = "target") const;
};

// Counts and percentages of the full target set size n.
OverlapReport overlap_report(const ShiftSet& set, std::size_t n);

struct SummaryStat {
  double mean = 0.0;
  double median = 0.0;
};

struct TrendRow {
  int year = 0;
  std::size_t count = 0;
  SummaryStat feature;
  SummaryStat ontology;  // over documents with at least one concept
  SummaryStat entropy;
};

struct TrendReport {
  std::vector<TrendRow> rows;  // ascending year
  std::string to_csv() const;
  std::string to_table() const;
};

// Year-wise mean/median of F, O_tail and entropy. `years` maps id -> year.
TrendReport trend_report(const ShiftScores& scores,
                         const std::map<std::string, int>& years);

SummaryStat summarize(std::vector<double> values);

// Per-document score table with set membership columns. Numbers are written
// in shortest round-trip form, so scores_from_csv restores them exactly.
std::string scores_to_csv(const ShiftScores& scores, const ShiftSet& set);
// Skips blank and '#' lines. Throws ParseError.
std::pair<ShiftScores, ShiftSet> scores_from_csv(const std::string& content);

}  // namespace driftforge

#endif  // DRIFTFORGE_SHIFT_H_
