#ifndef DRIFTFORGE_ADAPT_H_
#define DRIFTFORGE_ADAPT_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "driftforge/augment.h"
#include "driftforge/corpus.h"
#include "driftforge/lexicon.h"
#include "driftforge/metrics.h"
#include "driftforge/retrieval.h"
#include "driftforge/shift.h"
#include "driftforge/stats.h"
#include "driftforge/trainer.h"

namespace driftforge {

struct AdaptConfig {
  std::size_t batch_size = 64;
  std::size_t k = 3;
  ShiftConfig shift;
  AugmentConfig augment;
  std::uint64_t seed = 7;
  // Predict the target split with the initial model before the stream starts.
  bool evaluate_baseline = true;
  double threshold = 0.5;

  void validate() const;
};

// One line of the adaptation log.
struct BatchRecord {
  std::size_t index = 0;
  std::vector<std::string> doc_ids;
  ShiftSet sets;
  std::vector<RetrievalResult> retrievals;
  std::size_t samples_sent = 0;
  std::uint64_t version_before = 0;
  std::uint64_t version_after = 0;
  bool updated = false;
  std::uint64_t augment_seed = 0;
  std::string batch_digest;  // FNV-1a of the batch JSONL, hex; empty when not updated

  std::string to_json() const;
  static BatchRecord from_json(const std::string& line);
};

struct AdaptInputs {
  std::vector<Document> target;  // streamed in order
  const Corpus* source = nullptr;
  const ConceptMatcher* matcher = nullptr;
  const SourceFeatureStats* feature_stats = nullptr;
  const ConceptStats* concept_stats = nullptr;
};

struct AdaptResult {
  std::vector<BatchRecord> batches;
  ModelHandle initial;
  ModelHandle final;
  std::size_t updates = 0;
  LabelSets predictions;  // final model, thresholded
  MetricsReport adapted;
  std::optional<LabelSets> baseline_predictions;
  std::optional<MetricsReport> baseline;
};

// Called after each batch is recorded, before the next one starts.
using BatchSink = std::function<void(const BatchRecord&)>;

// Streams target batches through detect, retrieve, augment and update. Target
// and source embeddings come from the trainer's current model; source rows
// are re-encoded whenever the model version changes. Target labels are used
// only for the final evaluation. Trainer errors propagate after the records
// produced so far have reached `sink`.
AdaptResult run_adaptation(const AdaptInputs& inputs, const AdaptConfig& config,
                           Trainer& trainer, const BatchSink& sink = {});

// Rebuilds the batch a record sent, for log replay. Uses the record's
// augmentation seed in place of `config.seed`.
AugmentedBatch replay_batch(const BatchRecord& record, const Corpus& source,
                            const ConceptMatcher& matcher, const AugmentConfig& config);

std::string digest_hex(std::string_view bytes);

// Augmentation seed for batch `index` of a run seeded with `seed`.
std::uint64_t batch_seed(std::uint64_t seed, std::size_t index);

// Per-batch detection with fixed, pre-computed scores (no model updates):
// the union over batches of each batch's shift set.
ShiftSet detect_per_batch(const ShiftScores& scores, std::size_t batch_size,
                          const ShiftConfig& config);

// ---------------------------------------------------------------- sweep

struct SweepPoint {
  std::string param;  // "k" or "rho"
  double value = 0.0;
  std::size_t k = 0;
  double rho = 0.0;
  MetricsReport metrics;
  std::size_t shifted_source_model = 0;  // |D_shift| under the initial model
  std::size_t shifted_loop = 0;          // sum of per-batch |B_shift| in the loop
  std::size_t updates = 0;
};

using TrainerFactory = std::function<std::unique_ptr<Trainer>()>;

// One full adaptation run per value, each with a fresh trainer; the other
// parameter stays at its value in `base`.
std::vector<SweepPoint> run_sweep(const AdaptInputs& inputs, const AdaptConfig& base,
                                  const std::string& param, const std::vector<double>& values,
                                  const TrainerFactory& factory);

// Rows P, R, sa-F1, mi-F1, ma-F1 plus shift-set sizes; one column per value.
std::string sweep_table(const std::vector<SweepPoint>& points);
std::string sweep_csv(const std::vector<SweepPoint>& points);

// "1..5" or "0.05,0.1,0.2" -> values.
std::vector<double> parse_param_values(const std::string& spec);

}  // namespace driftforge

#endif  // DRIFTFORGE_ADAPT_H_
