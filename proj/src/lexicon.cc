#include "driftforge/lexicon.h"

#include <algorithm>
#include <deque>

#include "driftforge/error.h"
#include "driftforge/text.h"

namespace driftforge {

std::vector<std::string> Concept::surface_forms() const {
  std::vector<std::string> forms;
  forms.reserve(synonyms.size() + 1);
  forms.push_back(preferred);
  forms.insert(forms.end(), synonyms.begin(), synonyms.end());
  return forms;
}

std::size_t ConceptLexicon::add(std::string id, std::string_view preferred,
                                const std::vector<std::string>& synonyms,
                                std::string_view source) {
  const std::string key = text::normalize_term(preferred);
  if (key.empty()) {
    throw ValidationError("concept '" + id + "' has an empty preferred term");
  }
  std::size_t index;
  if (auto it = by_preferred_.find(key); it != by_preferred_.end()) {
    index = it->second;
  } else {
    if (by_id_.count(id) != 0) {
      // Same id, different preferred term: keep both under distinct ids.
      std::size_t n = 2;
      while (by_id_.count(id + "#" + std::to_string(n)) != 0) ++n;
      id += "#" + std::to_string(n);
    }
    index = concepts_.size();
    Concept c;
    c.id = id;
    c.preferred = std::string(text::trim(preferred));
    concepts_.push_back(std::move(c));
    by_id_.emplace(concepts_.back().id, index);
    by_preferred_.emplace(key, index);
    index_form(key, index);
  }
  Concept& c = concepts_[index];
  if (!source.empty()) c.sources.emplace(source);
  for (const auto& s : synonyms) {
    const std::string norm = text::normalize_term(s);
    if (norm.empty() || norm == key) continue;
    const bool present =
        std::any_of(c.synonyms.begin(), c.synonyms.end(),
                    [&](const std::string& x) { return text::normalize_term(x) == norm; });
    if (present) continue;
    c.synonyms.emplace_back(text::trim(s));
    index_form(norm, index);
  }
  return index;
}

void ConceptLexicon::index_form(const std::string& normalized,
                                std::size_t concept_index) {
  auto& v = term_index_[normalized];
  if (std::find(v.begin(), v.end(), concept_index) == v.end()) {
    v.push_back(concept_index);
  }
}

const Concept* ConceptLexicon::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &concepts_[it->second];
}

const std::vector<std::size_t>& ConceptLexicon::lookup(
    const std::string& normalized) const {
  static const std::vector<std::size_t> kEmpty;
  auto it = term_index_.find(normalized);
  return it == term_index_.end() ? kEmpty : it->second;
}

ConceptLexicon merge(const std::vector<const ConceptLexicon*>& lexicons) {
  ConceptLexicon out;
  for (const ConceptLexicon* lex : lexicons) {
    if (lex == nullptr) continue;
    for (const Concept& c : lex->concepts()) {
      if (c.sources.empty()) {
        out.add(c.id, c.preferred, c.synonyms, "");
      }
      for (const auto& src : c.sources) {
        out.add(c.id, c.preferred, c.synonyms, src);
      }
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::vector<std::string>>> canonical_form(
    const ConceptLexicon& lexicon) {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  out.reserve(lexicon.size());
  for (const Concept& c : lexicon.concepts()) {
    std::vector<std::string> syn;
    for (const auto& s : c.synonyms) syn.push_back(text::normalize_term(s));
    std::sort(syn.begin(), syn.end());
    out.emplace_back(text::normalize_term(c.preferred), std::move(syn));
  }
  std::sort(out.begin(), out.end());
  return out;
}

const std::unordered_set<std::string>& default_stopwords() {
  static const std::unordered_set<std::string> kStopwords = {
      "a",    "an",    "and",   "are",  "as",    "at",    "be",   "by",
      "for",  "from",  "has",   "he",   "in",    "is",    "it",   "its",
      "of",   "on",    "or",    "that", "the",   "to",    "was",  "were",
      "will", "with",  "this",  "these", "those", "which", "not",  "no",
      "but",  "if",    "into",  "than", "then",  "there", "their", "they",
      "we",   "our",   "can",   "may",  "all",   "any",   "other", "such",
      "data", "paper", "method", "result", "results", "regulation", "use",
      "used", "using", "new",   "based"};
  return kStopwords;
}

struct ConceptMatcher::Automaton {
  static constexpr std::uint32_t kNoUnit = UINT32_MAX;

  struct Pattern {
    std::size_t length;  // in units
    std::string form;
    std::vector<std::size_t> concepts;  // sorted by concept id
  };

  std::unordered_map<std::string, std::uint32_t> vocab;
  std::vector<std::unordered_map<std::uint32_t, std::uint32_t>> next;
  std::vector<std::uint32_t> fail;
  std::vector<std::vector<std::uint32_t>> out;  // pattern ids, including via fail
  std::vector<Pattern> patterns;

  std::uint32_t intern(const std::string& s) {
    auto [it, inserted] =
        vocab.emplace(s, static_cast<std::uint32_t>(vocab.size()));
    return it->second;
  }

  void insert(const std::vector<std::uint32_t>& units, std::uint32_t pattern) {
    std::uint32_t state = 0;
    for (std::uint32_t u : units) {
      auto it = next[state].find(u);
      if (it == next[state].end()) {
        const auto fresh = static_cast<std::uint32_t>(next.size());
        next.emplace_back();
        out.emplace_back();
        next[state].emplace(u, fresh);
        state = fresh;
      } else {
        state = it->second;
      }
    }
    out[state].push_back(pattern);
  }

  void build_links() {
    fail.assign(next.size(), 0);
    std::deque<std::uint32_t> queue;
    for (const auto& [u, child] : next[0]) queue.push_back(child);
    while (!queue.empty()) {
      const std::uint32_t state = queue.front();
      queue.pop_front();
      for (const auto& [u, child] : next[state]) {
        std::uint32_t f = fail[state];
        while (f != 0 && next[f].find(u) == next[f].end()) f = fail[f];
        auto it = next[f].find(u);
        fail[child] = (it != next[f].end() && it->second != child) ? it->second : 0;
        const auto& inherited = out[fail[child]];
        out[child].insert(out[child].end(), inherited.begin(), inherited.end());
        queue.push_back(child);
      }
    }
  }

  std::uint32_t step(std::uint32_t state, std::uint32_t unit) const {
    if (unit == kNoUnit) return 0;
    while (true) {
      auto it = next[state].find(unit);
      if (it != next[state].end()) return it->second;
      if (state == 0) return 0;
      state = fail[state];
    }
  }
};

ConceptMatcher::ConceptMatcher(const ConceptLexicon& lexicon)
    : ConceptMatcher(lexicon, default_stopwords()) {}

ConceptMatcher::ConceptMatcher(const ConceptLexicon& lexicon,
                               std::unordered_set<std::string> stopwords)
    : lexicon_(&lexicon), automaton_(std::make_unique<Automaton>()) {
  Automaton& a = *automaton_;
  a.next.emplace_back();
  a.out.emplace_back();
  // Deterministic pattern order regardless of hash-map iteration.
  std::vector<const std::string*> forms;
  forms.reserve(lexicon.term_index().size());
  for (const auto& [form, _] : lexicon.term_index()) forms.push_back(&form);
  std::sort(forms.begin(), forms.end(),
            [](const std::string* x, const std::string* y) { return *x < *y; });
  for (const std::string* form : forms) {
    const auto units = text::segment(*form);
    if (units.empty()) continue;
    const bool has_word =
        std::any_of(units.begin(), units.end(), [](const text::Unit& u) {
          return u.kind == text::UnitKind::kWord;
        });
    if (!has_word) continue;
    if (units.size() == 1 && stopwords.count(units.front().norm) != 0) continue;
    std::vector<std::uint32_t> ids;
    ids.reserve(units.size());
    for (const auto& u : units) ids.push_back(a.intern(u.norm));
    Automaton::Pattern p;
    p.length = units.size();
    p.form = *form;
    p.concepts = lexicon.lookup(*form);
    std::sort(p.concepts.begin(), p.concepts.end(),
              [&](std::size_t x, std::size_t y) {
                return lexicon.concepts()[x].id < lexicon.concepts()[y].id;
              });
    const auto pid = static_cast<std::uint32_t>(a.patterns.size());
    a.patterns.push_back(std::move(p));
    a.insert(ids, pid);
  }
  a.build_links();
}

ConceptMatcher::~ConceptMatcher() = default;
ConceptMatcher::ConceptMatcher(ConceptMatcher&&) noexcept = default;
ConceptMatcher& ConceptMatcher::operator=(ConceptMatcher&&) noexcept = default;

MatchResult ConceptMatcher::match(std::string_view text_utf8) const {
  MatchResult result;
  if (text_utf8.empty() || automaton_->patterns.empty()) return result;
  const Automaton& a = *automaton_;
  const auto units = text::segment(text_utf8);

  struct Candidate {
    std::size_t start;
    std::size_t end;  // unit index, exclusive
    std::uint32_t pattern;
  };
  std::vector<Candidate> candidates;
  std::uint32_t state = 0;
  for (std::size_t j = 0; j < units.size(); ++j) {
    auto it = a.vocab.find(units[j].norm);
    const std::uint32_t id = it == a.vocab.end() ? Automaton::kNoUnit : it->second;
    state = a.step(state, id);
    for (std::uint32_t pid : a.out[state]) {
      const std::size_t len = a.patterns[pid].length;
      candidates.push_back({j + 1 - len, j + 1, pid});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& x, const Candidate& y) {
              if (x.start != y.start) return x.start < y.start;
              return x.end > y.end;
            });
  std::size_t cursor = 0;
  std::vector<std::string> ids;
  for (const Candidate& c : candidates) {
    if (c.start < cursor) continue;
    cursor = c.end;
    const auto& p = a.patterns[c.pattern];
    for (std::size_t ci : p.concepts) {
      const auto& id = lexicon_->concepts()[ci].id;
      result.matches.push_back(
          {id, units[c.start].begin, units[c.end - 1].end, p.form});
      ids.push_back(id);
    }
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  result.concept_ids = std::move(ids);
  return result;
}

}  // namespace driftforge
