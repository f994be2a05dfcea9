#ifndef DRIFTFORGE_EXPERIMENT_H_
#define DRIFTFORGE_EXPERIMENT_H_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "driftforge/adapt.h"
#include "driftforge/synthetic.h"
#include "driftforge/trainer.h"

namespace driftforge {

// End-to-end run on the planted-drift corpus with the stub model. The source
// model trains on the labeled source-period train split; the stream is the
// target-period test split, whose labels are read only for scoring.
struct SyntheticExperimentConfig {
  SyntheticConfig synthetic;
  StubConfig stub;
  int source_epochs = 10;
  double train_ratio = 0.7;
  AdaptConfig adapt;
};

// Everything a run needs that does not depend on the adaptation settings.
// Not movable: the matcher points into the lexicon.
class SyntheticSetup {
 public:
  explicit SyntheticSetup(const SyntheticExperimentConfig& config);
  SyntheticSetup(const SyntheticSetup&) = delete;
  SyntheticSetup& operator=(const SyntheticSetup&) = delete;

  const SyntheticDataset& data() const { return data_; }
  const Corpus& source() const { return source_; }
  const Corpus& target() const { return target_; }
  const ConceptMatcher& matcher() const { return *matcher_; }
  const SourceFeatureStats& feature_stats() const { return *feature_stats_; }
  const ConceptStats& concept_stats() const { return concept_stats_; }

  AdaptInputs inputs() const;
  // A freshly fitted source model; identical on every call.
  std::unique_ptr<StubTrainer> make_trainer(bool frozen = false) const;

 private:
  SyntheticExperimentConfig config_;
  SyntheticDataset data_;
  Corpus source_;
  Corpus target_;
  std::unique_ptr<ConceptLexicon> lexicon_;
  std::unique_ptr<ConceptMatcher> matcher_;
  std::optional<SourceFeatureStats> feature_stats_;
  ConceptStats concept_stats_;
};

struct SignalRecall {
  std::size_t planted = 0;  // drifted documents in the stream
  std::size_t in_shifted = 0;
  std::size_t in_uncertain = 0;
  std::size_t in_feature = 0;
  std::size_t in_ontology = 0;

  double recall() const {
    return planted == 0 ? 0.0 : static_cast<double>(in_shifted) / static_cast<double>(planted);
  }
};

// How many planted drifted documents of `target` the run's batches flagged.
SignalRecall drift_recall(const AdaptResult& result, const SyntheticDataset& data,
                          const Corpus& target);

struct SyntheticOutcome {
  SignalRecall recall;
  std::size_t stream_size = 0;
  std::size_t shifted = 0;
  AdaptResult result;  // carries baseline and adapted metrics
};

SyntheticOutcome run_synthetic_experiment(const SyntheticSetup& setup,
                                          const AdaptConfig& adapt,
                                          bool frozen = false);

}  // namespace driftforge

#endif  // DRIFTFORGE_EXPERIMENT_H_
