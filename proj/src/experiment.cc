#include "driftforge/experiment.h"

#include <set>

#include "driftforge/lexicon.h"
#include "driftforge/stats.h"

namespace driftforge {

SyntheticSetup::SyntheticSetup(const SyntheticExperimentConfig& config)
    : config_(config), data_(generate_synthetic(config.synthetic)) {
  const PartitionResult part = partition_by_time(data_.corpus, data_.partition);
  const Split src = split_train_test(part.buckets[0], config.train_ratio, config.synthetic.seed);
  const Split tgt = split_train_test(part.buckets[1], config.train_ratio, config.synthetic.seed);
  source_ = data_.corpus.subset(src.train_ids);
  target_ = data_.corpus.subset(tgt.test_ids);
  lexicon_ = std::make_unique<ConceptLexicon>(parse_llm_lexicon(data_.lexicon_json));
  matcher_ = std::make_unique<ConceptMatcher>(*lexicon_);
  auto trainer = make_trainer();
  feature_stats_.emplace(fit_feature_stats(trainer->encode(source_.docs()).embeddings));
  concept_stats_ = fit_concept_stats(source_.docs(), *matcher_);
}

AdaptInputs SyntheticSetup::inputs() const {
  return AdaptInputs{target_.docs(), &source_, matcher_.get(), &*feature_stats_, &concept_stats_};
}

std::unique_ptr<StubTrainer> SyntheticSetup::make_trainer(bool frozen) const {
  StubConfig cfg = config_.stub;
  cfg.frozen = frozen;
  auto t = std::make_unique<StubTrainer>(data_.labels, cfg);
  t->fit_source(source_.docs(), config_.source_epochs);
  return t;
}

SignalRecall drift_recall(const AdaptResult& result, const SyntheticDataset& data,
                          const Corpus& target) {
  std::set<std::string> s, u, f, o;
  for (const auto& b : result.batches) {
    s.insert(b.sets.shifted.begin(), b.sets.shifted.end());
    u.insert(b.sets.uncertain.begin(), b.sets.uncertain.end());
    f.insert(b.sets.feature.begin(), b.sets.feature.end());
    o.insert(b.sets.ontology.begin(), b.sets.ontology.end());
  }
  SignalRecall r;
  for (const auto& d : target.docs()) {
    if (!data.drifted_ids.count(d.id)) continue;
    ++r.planted;
    r.in_shifted += s.count(d.id);
    r.in_uncertain += u.count(d.id);
    r.in_feature += f.count(d.id);
    r.in_ontology += o.count(d.id);
  }
  return r;
}

SyntheticOutcome run_synthetic_experiment(const SyntheticSetup& setup,
                                          const AdaptConfig& adapt, bool frozen) {
  auto trainer = setup.make_trainer(frozen);
  SyntheticOutcome out;
  out.result = run_adaptation(setup.inputs(), adapt, *trainer);
  out.recall = drift_recall(out.result, setup.data(), setup.target());
  out.stream_size = setup.target().size();
  for (const auto& b : out.result.batches) out.shifted += b.sets.shifted.size();
  return out;
}

}  // namespace driftforge
