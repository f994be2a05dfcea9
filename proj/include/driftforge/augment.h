#ifndef DRIFTFORGE_AUGMENT_H_
#define DRIFTFORGE_AUGMENT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "driftforge/corpus.h"
#include "driftforge/lexicon.h"
#include "driftforge/retrieval.h"

namespace driftforge {

struct Substitution {
  std::size_t begin = 0;  // byte span in the origin text
  std::size_t end = 0;
  std::string original;
  std::string replacement;
  std::string concept_id;

  bool operator==(const Substitution&) const = default;
};

struct AugmentedSample {
  std::string origin_id;
  int variant_index = 0;  // 0 is the unmodified original
  std::string text;
  std::vector<std::string> labels;
  std::vector<Substitution> substitutions;  // ascending, non-overlapping

  bool operator==(const AugmentedSample&) const = default;
};

struct AugmentConfig {
  int variants = 1;
  int max_subs = 3;
  bool include_originals = true;
  bool dedupe_sources = false;
  // Restrict replacement candidates to LLM-sourced forms when any exist.
  bool prefer_llm = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// Synonym-substituted variants of `doc`, numbered 1..variants. Variants in
// which nothing could be substituted are dropped.
std::vector<AugmentedSample> substitute_synonyms(const Document& doc,
                                                 const ConceptMatcher& matcher,
                                                 const AugmentConfig& config);

// Rebuilds the origin text of a variant from its substitution record.
std::string reverse_substitutions(const AugmentedSample& sample);

struct AugmentedBatch {
  std::vector<AugmentedSample> samples;
};

// Originals (when configured) plus variants for every retrieved neighbor,
// in retrieval order. Throws ValidationError for unknown source ids.
AugmentedBatch augment_batch(const std::vector<RetrievalResult>& retrievals,
                             const Corpus& source_corpus,
                             const ConceptMatcher& matcher,
                             const AugmentConfig& config);

std::string batch_to_jsonl(const AugmentedBatch& batch, const std::string& meta_json = "");
AugmentedBatch batch_from_jsonl(const std::string& content);

}  // namespace driftforge

#endif  // DRIFTFORGE_AUGMENT_H_
