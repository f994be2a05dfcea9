#include "driftforge/synthetic.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "driftforge/error.h"
#include "driftforge/random.h"
#include "json.hpp"

namespace driftforge {

namespace {

constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
                                   "s", "t", "v", "z", "br", "dr", "tr", "pl", "st", "gr"};
constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "eo", "ou"};

class WordFactory {
 public:
  explicit WordFactory(std::uint64_t seed) : rng_(seed) {}

  std::string make(std::size_t syllables) {
    while (true) {
      std::string w;
      for (std::size_t s = 0; s < syllables; ++s) {
        w += kOnsets[rng_.uniform_index(std::size(kOnsets))];
        w += kVowels[rng_.uniform_index(std::size(kVowels))];
      }
      if (rng_.bernoulli(0.5)) w += "n";
      if (used_.insert(w).second) return w;
    }
  }

 private:
  Rng rng_;
  std::unordered_set<std::string> used_;
};

void capitalize(std::string& w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticConfig& config) {
  if (config.labels < 2 || config.terms_per_label < 1 || config.template_share < 1) {
    throw ConfigError("synthetic generator needs at least 2 labels and 1 term per label");
  }
  if (config.drift_fraction < 0.0 || config.drift_fraction > 1.0) {
    throw ConfigError("drift_fraction must be in [0, 1]");
  }
  if (config.period_years < 1 || config.period1_start + config.period_years > config.period2_start) {
    throw ConfigError("synthetic periods must not overlap");
  }

  SyntheticDataset ds;
  WordFactory words(derive_seed(config.seed, "words"));
  for (std::size_t l = 0; l < config.labels; ++l) ds.labels.push_back(fmt::format("label_{:02}", l));

  const std::size_t n_terms = config.terms_per_label;
  const auto n_drift = static_cast<std::size_t>(
      std::floor(config.drift_fraction * static_cast<double>(n_terms) + 0.5));
  // Term t of label l is ds.terms[l * n_terms + t]; rank order is frequency order.
  for (std::size_t l = 0; l < config.labels; ++l) {
    for (std::size_t t = 0; t < n_terms; ++t) {
      ds.terms.push_back({words.make(3), words.make(3), ds.labels[l], t + n_drift >= n_terms});
    }
  }
  std::vector<double> cumulative;
  double total = 0.0;
  for (std::size_t t = 0; t < n_terms; ++t) {
    total += 1.0 / std::pow(static_cast<double>(t + 1), config.term_skew);
    cumulative.push_back(total);
  }
  const std::size_t n_groups = (config.labels + config.template_share - 1) / config.template_share;
  std::vector<std::vector<std::string>> templates(n_groups * n_terms);
  for (auto& bag : templates) {
    for (std::size_t i = 0; i < config.template_vocab; ++i) bag.push_back(words.make(2));
  }
  std::vector<std::string> filler;
  for (std::size_t i = 0; i < config.filler_vocab; ++i) filler.push_back(words.make(2));

  std::vector<Document> docs;
  for (int period = 0; period < 2; ++period) {
    const int start = period == 0 ? config.period1_start : config.period2_start;
    Rng rng(derive_seed(config.seed, "period", static_cast<std::uint64_t>(period)));
    for (std::size_t i = 0; i < config.docs_per_period; ++i) {
      Document d;
      d.id = fmt::format("p{}-{:05}", period + 1, i);
      d.year = start + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(config.period_years)));
      std::vector<std::size_t> labs{static_cast<std::size_t>(rng.uniform_index(config.labels))};
      if (rng.bernoulli(config.multi_label_rate)) {
        const auto other = static_cast<std::size_t>(rng.uniform_index(config.labels - 1));
        labs.push_back(other >= labs[0] ? other + 1 : other);
      }
      std::vector<std::string> tokens;
      bool drifted = false;
      for (std::size_t l : labs) {
        const double u = rng.uniform01() * total;
        const auto rank = static_cast<std::size_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        const std::size_t t = std::min(rank, n_terms - 1);
        const SyntheticTerm& term = ds.terms[l * n_terms + t];
        const bool use_synonym = period == 1 && term.drifted;
        drifted = drifted || use_synonym;
        for (std::size_t r = 0; r < config.anchor_repeats; ++r) tokens.push_back(use_synonym ? term.synonym : term.term);
        const auto& bag = templates[(l / config.template_share) * n_terms + t];
        for (std::size_t c = 0; c < config.template_per_doc; ++c) {
          tokens.push_back(bag[rng.uniform_index(bag.size())]);
        }
        d.labels.push_back(ds.labels[l]);
      }
      for (std::size_t f = 0; f < config.filler_per_doc; ++f) {
        tokens.push_back(filler[rng.uniform_index(filler.size())]);
      }
      rng.shuffle(tokens);
      for (std::size_t k = 0; k < tokens.size(); ++k) {
        if (k % 8 == 0) {
          if (k > 0) d.text += ". ";
          capitalize(tokens[k]);
        } else {
          d.text += ' ';
        }
        d.text += tokens[k];
      }
      d.text += '.';
      std::sort(d.labels.begin(), d.labels.end());
      if (drifted) ds.drifted_ids.insert(d.id);
      docs.push_back(std::move(d));
    }
  }
  ds.corpus = Corpus(std::move(docs), ds.labels);
  ds.partition.intervals = {
      {config.period1_start, config.period1_start + config.period_years},
      {config.period2_start, config.period2_start + config.period_years}};
  ds.partition.source_index = 0;
  ds.partition.target_index = 1;

  nlohmann::json entities = nlohmann::json::array();
  for (const auto& t : ds.terms) entities.push_back({{"term", t.term}, {"synonyms", {t.synonym}}});
  ds.lexicon_json = nlohmann::json{{"entities", entities}}.dump();
  return ds;
}

}  // namespace driftforge
