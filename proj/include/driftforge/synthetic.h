#ifndef DRIFTFORGE_SYNTHETIC_H_
#define DRIFTFORGE_SYNTHETIC_H_

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "driftforge/corpus.h"

namespace driftforge {

// Two-period corpus with planted terminology drift.
//
// Every label owns `terms_per_label` indicative pseudo-words, each with one
// synonym, drawn with Zipf-like weights 1/(rank+1)^term_skew. In the second
// period the rarest `drift_fraction` of each label's terms is always written
// as its synonym. A document draws one anchor term per label, written
// `anchor_repeats` times, together with words from the anchor's template and
// generic filler.
// A template is shared by the same-rank terms of `template_share` labels, so
// template words point at the right source documents without identifying the
// label. The planted lexicon lists every term with its synonym.
struct SyntheticConfig {
  std::uint64_t seed = 7;
  std::size_t labels = 12;
  std::size_t terms_per_label = 10;
  double drift_fraction = 0.3;
  double term_skew = 0.5;
  std::size_t anchor_repeats = 2;
  std::size_t docs_per_period = 3000;
  std::size_t template_share = 3;
  std::size_t template_vocab = 12;
  std::size_t template_per_doc = 6;
  std::size_t filler_vocab = 40;
  std::size_t filler_per_doc = 6;
  double multi_label_rate = 0.2;
  int period1_start = 2010;
  int period2_start = 2018;
  int period_years = 5;
};

struct SyntheticTerm {
  std::string term;
  std::string synonym;
  std::string label;
  bool drifted = false;
};

struct SyntheticDataset {
  Corpus corpus;
  std::vector<std::string> labels;
  std::vector<SyntheticTerm> terms;
  TimePartition partition;  // interval 0: source period, 1: target period
  // Second-period documents containing at least one synonym.
  std::set<std::string> drifted_ids;
  // Planted lexicon in the LLM entity schema.
  std::string lexicon_json;
};

SyntheticDataset generate_synthetic(const SyntheticConfig& config = {});

}  // namespace driftforge

#endif  // DRIFTFORGE_SYNTHETIC_H_
