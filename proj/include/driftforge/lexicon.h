#ifndef DRIFTFORGE_LEXICON_H_
#define DRIFTFORGE_LEXICON_H_

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace driftforge {

struct Concept {
  std::string id;
  std::string preferred;              // display form as ingested
  std::vector<std::string> synonyms;  // display forms, distinct after normalization
  std::set<std::string> sources;      // "mesh", "tabular", "cso", "llm", ...

  // Preferred term followed by synonyms.
  std::vector<std::string> surface_forms() const;
};

// Concept inventory plus an index from normalized surface form to the
// concepts carrying it. Every surface form of every concept is indexed.
class ConceptLexicon {
 public:
  // Adds a concept, or merges synonyms into the existing concept with the
  // same normalized preferred term. Terms that normalize to "" are dropped.
  // Returns the index of the concept that received the terms.
  std::size_t add(std::string id, std::string_view preferred,
                  const std::vector<std::string>& synonyms,
                  std::string_view source);

  const std::vector<Concept>& concepts() const { return concepts_; }
  std::size_t size() const { return concepts_.size(); }
  bool empty() const { return concepts_.empty(); }

  const Concept* find(const std::string& id) const;
  // Concept indices for a normalized form; empty when absent.
  const std::vector<std::size_t>& lookup(const std::string& normalized) const;
  const std::unordered_map<std::string, std::vector<std::size_t>>& term_index()
      const {
    return term_index_;
  }

 private:
  void index_form(const std::string& normalized, std::size_t concept_index);

  std::vector<Concept> concepts_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::size_t> by_preferred_;
  std::unordered_map<std::string, std::vector<std::size_t>> term_index_;
};

// Concepts with equal normalized preferred terms merge; synonym sets union.
// Ids of the first lexicon carrying a concept win.
ConceptLexicon merge(const std::vector<const ConceptLexicon*>& lexicons);

// Lexicon as sorted (preferred, sorted synonyms) pairs over normalized forms,
// for comparisons that ignore concept ids and ingestion order.
std::vector<std::pair<std::string, std::vector<std::string>>> canonical_form(
    const ConceptLexicon& lexicon);

// MeSH descriptor (or supplementary concept) XML. One concept per record;
// records without a name are skipped with a warning.
ConceptLexicon ingest_mesh_xml(const std::string& path);
ConceptLexicon parse_mesh_xml(const std::string& xml);

struct TabularOptions {
  std::string pt_column;
  std::string npt_column;
  char delimiter = ',';
};

// Delimited PT/NPT table with a header row (e.g. a EuroVoc export).
ConceptLexicon ingest_tabular_thesaurus(const std::string& path,
                                        const TabularOptions& options);
ConceptLexicon parse_tabular_thesaurus(const std::string& content,
                                       const TabularOptions& options);

// CSO-style triples (topicA, relation, topicB). `relatedEquivalent` and
// `preferentialEquivalent` edges define synonym groups; the object of a
// `preferentialEquivalent` edge becomes the group's preferred term.
ConceptLexicon ingest_cso_triples(const std::string& path);
ConceptLexicon parse_cso_triples(const std::string& content);

// LLM lexicon output: one JSON object {"entities":[{"term","synonyms"}]} or
// JSON Lines of such objects. Strict mode rejects any extra key.
ConceptLexicon ingest_llm_lexicon(const std::string& path, bool strict = true);
ConceptLexicon parse_llm_lexicon(const std::string& content, bool strict = true);

// Persisted form: JSON array of {concept_id, preferred, synonyms[], sources[]}.
// With metadata ({"meta": ...}) the array sits under "concepts" of that object.
void save_lexicon(const ConceptLexicon& lexicon, const std::string& path,
                  const std::string& meta_json = "");
ConceptLexicon load_lexicon(const std::string& path);
std::string lexicon_to_json(const ConceptLexicon& lexicon, const std::string& meta_json = "");
ConceptLexicon lexicon_from_json(const std::string& content);

struct ConceptMatch {
  std::string concept_id;
  std::size_t begin = 0;  // byte offsets into the document text
  std::size_t end = 0;
  std::string form;  // normalized text at [begin, end)

  bool operator==(const ConceptMatch&) const = default;
};

struct MatchResult {
  std::vector<ConceptMatch> matches;  // by position, then concept id
  std::vector<std::string> concept_ids;  // C(x): distinct, sorted
};

// Default single-token stopwords excluded from matching.
const std::unordered_set<std::string>& default_stopwords();

// Multi-pattern matcher over the normalized unit stream of a text
// (Aho-Corasick on interned units). Immutable after construction; matching
// is safe from concurrent threads.
class ConceptMatcher {
 public:
  explicit ConceptMatcher(const ConceptLexicon& lexicon);
  ConceptMatcher(const ConceptLexicon& lexicon,
                 std::unordered_set<std::string> stopwords);
  ~ConceptMatcher();
  ConceptMatcher(ConceptMatcher&&) noexcept;
  ConceptMatcher& operator=(ConceptMatcher&&) noexcept;

  // Non-overlapping matches chosen leftmost-longest. A span whose form maps
  // to several concepts yields one ConceptMatch per concept.
  MatchResult match(std::string_view text) const;

  const ConceptLexicon& lexicon() const { return *lexicon_; }

 private:
  struct Automaton;
  const ConceptLexicon* lexicon_;
  std::unique_ptr<Automaton> automaton_;
};

inline MatchResult match_concepts(std::string_view text,
                                  const ConceptMatcher& matcher) {
  return matcher.match(text);
}

}  // namespace driftforge

#endif  // DRIFTFORGE_LEXICON_H_
