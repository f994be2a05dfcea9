#include "driftforge/augment.h"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "driftforge/error.h"
#include "driftforge/random.h"
#include "driftforge/text.h"
#include "json.hpp"

namespace driftforge {

using nlohmann::json;

void AugmentConfig::validate() const {
  if (variants < 0) throw ConfigError("variants must be nonnegative");
  if (max_subs < 1) throw ConfigError("max_subs must be at least 1");
}

namespace {

struct Candidate {
  std::string form;
  std::string concept_id;
};

struct Site {
  std::size_t begin;
  std::size_t end;
  std::vector<Candidate> candidates;
};

std::vector<Site> substitution_sites(const std::string& text,
                                     const ConceptMatcher& matcher, bool prefer_llm) {
  const MatchResult result = matcher.match(text);
  const ConceptLexicon& lex = matcher.lexicon();
  std::vector<Site> sites;
  std::size_t i = 0;
  const auto& m = result.matches;
  while (i < m.size()) {
    std::size_t j = i;
    while (j < m.size() && m[j].begin == m[i].begin && m[j].end == m[i].end) ++j;
    Site site{m[i].begin, m[i].end, {}};
    std::vector<Candidate> llm;
    std::unordered_set<std::string> seen{m[i].form};
    for (std::size_t k = i; k < j; ++k) {
      const Concept* c = lex.find(m[k].concept_id);
      if (c == nullptr) continue;
      for (const auto& form : c->surface_forms()) {
        if (!seen.insert(text::normalize_term(form)).second) continue;
        site.candidates.push_back({form, c->id});
        if (c->sources.count("llm") != 0) llm.push_back({form, c->id});
      }
    }
    if (prefer_llm && !llm.empty()) site.candidates = std::move(llm);
    if (!site.candidates.empty()) sites.push_back(std::move(site));
    i = j;
  }
  return sites;
}

}  // namespace

std::vector<AugmentedSample> substitute_synonyms(const Document& doc,
                                                 const ConceptMatcher& matcher,
                                                 const AugmentConfig& config) {
  config.validate();
  std::vector<AugmentedSample> out;
  const auto sites = substitution_sites(doc.text, matcher, config.prefer_llm);
  if (sites.empty()) return out;
  for (int v = 1; v <= config.variants; ++v) {
    Rng rng(derive_seed(config.seed, doc.id, static_cast<std::uint64_t>(v)));
    std::vector<std::size_t> order(sites.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    const std::size_t take =
        std::min(static_cast<std::size_t>(config.max_subs), order.size());
    // Partial Fisher-Yates: the first `take` slots are a uniform sample.
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t r = k + static_cast<std::size_t>(rng.uniform_index(order.size() - k));
      std::swap(order[k], order[r]);
    }
    order.resize(take);
    std::sort(order.begin(), order.end());

    AugmentedSample sample;
    sample.origin_id = doc.id;
    sample.variant_index = v;
    sample.labels = doc.labels;
    std::size_t cursor = 0;
    for (std::size_t idx : order) {
      const Site& site = sites[idx];
      const Candidate& pick =
          site.candidates[static_cast<std::size_t>(rng.uniform_index(site.candidates.size()))];
      const std::string original = doc.text.substr(site.begin, site.end - site.begin);
      std::string replacement = text::apply_case(pick.form, text::case_pattern(original));
      if (replacement == original) continue;
      sample.text.append(doc.text, cursor, site.begin - cursor);
      sample.text += replacement;
      cursor = site.end;
      sample.substitutions.push_back(
          {site.begin, site.end, original, std::move(replacement), pick.concept_id});
    }
    if (sample.substitutions.empty()) continue;
    sample.text.append(doc.text, cursor, std::string::npos);
    out.push_back(std::move(sample));
  }
  return out;
}

std::string reverse_substitutions(const AugmentedSample& sample) {
  // Walk the variant text, mapping each replacement back to its original.
  std::string out;
  std::size_t origin_cursor = 0;
  std::size_t variant_cursor = 0;
  for (const auto& s : sample.substitutions) {
    const std::size_t gap = s.begin - origin_cursor;
    out.append(sample.text, variant_cursor, gap);
    variant_cursor += gap;
    if (sample.text.compare(variant_cursor, s.replacement.size(), s.replacement) != 0) {
      throw ValidationError("substitution record does not match variant text");
    }
    out += s.original;
    variant_cursor += s.replacement.size();
    origin_cursor = s.end;
  }
  out.append(sample.text, variant_cursor, std::string::npos);
  return out;
}

AugmentedBatch augment_batch(const std::vector<RetrievalResult>& retrievals,
                             const Corpus& source_corpus,
                             const ConceptMatcher& matcher,
                             const AugmentConfig& config) {
  config.validate();
  AugmentedBatch batch;
  std::unordered_set<std::string> seen;
  for (const auto& r : retrievals) {
    for (const auto& n : r.neighbors) {
      const Document* doc = source_corpus.find(n.source_id);
      if (doc == nullptr) {
        throw ValidationError("retrieved source id '" + n.source_id + "' not in source corpus");
      }
      if (config.dedupe_sources && !seen.insert(doc->id).second) continue;
      if (config.include_originals) {
        batch.samples.push_back({doc->id, 0, doc->text, doc->labels, {}});
      }
      auto variants = substitute_synonyms(*doc, matcher, config);
      for (auto& v : variants) batch.samples.push_back(std::move(v));
    }
  }
  return batch;
}

std::string batch_to_jsonl(const AugmentedBatch& batch, const std::string& meta_json) {
  std::string out;
  if (!meta_json.empty()) out += meta_json + "\n";
  for (const auto& s : batch.samples) {
    json subs = json::array();
    for (const auto& sub : s.substitutions) {
      subs.push_back({{"begin", sub.begin},
                      {"end", sub.end},
                      {"original", sub.original},
                      {"replacement", sub.replacement},
                      {"concept_id", sub.concept_id}});
    }
    out += json{{"origin_id", s.origin_id},
                {"variant_index", s.variant_index},
                {"text", s.text},
                {"labels", s.labels},
                {"substitutions", subs}}
               .dump() +
           "\n";
  }
  return out;
}

AugmentedBatch batch_from_jsonl(const std::string& content) {
  AugmentedBatch batch;
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    if (j.contains("meta")) continue;
    try {
      AugmentedSample s;
      s.origin_id = j.at("origin_id").get<std::string>();
      s.variant_index = j.at("variant_index").get<int>();
      s.text = j.at("text").get<std::string>();
      s.labels = j.at("labels").get<std::vector<std::string>>();
      for (const auto& sub : j.at("substitutions")) {
        s.substitutions.push_back({sub.at("begin").get<std::size_t>(),
                                   sub.at("end").get<std::size_t>(),
                                   sub.at("original").get<std::string>(),
                                   sub.at("replacement").get<std::string>(),
                                   sub.at("concept_id").get<std::string>()});
      }
      batch.samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw ParseError(std::string("invalid batch record: ") + e.what(), lineno);
    }
  }
  return batch;
}

}  // namespace driftforge
