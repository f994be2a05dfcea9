#include "driftforge/shift.h"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <sstream>

#include <fmt/format.h>

#include "driftforge/error.h"
#include "driftforge/parallel.h"

namespace driftforge {

void ShiftConfig::validate() const {
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
  if (!(tau_p > 0.0 && tau_p < 1.0)) throw ConfigError("tau_p must lie in (0, 1)");
  if (!(tau_h >= 0.0)) throw ConfigError("tau_h must be nonnegative");
}

namespace {

double sigmoid(double z) {
  z = std::clamp(z, -kLogitClamp, kLogitClamp);
  return 1.0 / (1.0 + std::exp(-z));
}

// -[p ln p + (1-p) ln(1-p)] with 0 ln 0 := 0.
double binary_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
  return h;
}

std::vector<std::string> set_union(const std::vector<std::string>& a,
                                   const std::vector<std::string>& b) {
  std::vector<std::string> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<std::string> set_intersection(const std::vector<std::string>& a,
                                          const std::vector<std::string>& b) {
  std::vector<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

template <typename Score>
std::vector<std::string> top_by(const ShiftScores& scores, std::size_t k,
                                Score score, bool (*eligible)(const DocShiftScore&)) {
  std::vector<const DocShiftScore*> pool;
  pool.reserve(scores.size());
  for (const auto& s : scores) {
    if (eligible(s)) pool.push_back(&s);
  }
  k = std::min(k, pool.size());
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k),
                    pool.end(), [&](const DocShiftScore* x, const DocShiftScore* y) {
                      const double sx = score(*x);
                      const double sy = score(*y);
                      if (sx != sy) return sx > sy;
                      return x->id < y->id;
                    });
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(pool[i]->id);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

UncertaintyScore uncertainty(std::span<const float> logits,
                             const ShiftConfig& config) {
  if (logits.empty()) throw ValidationError("uncertainty needs at least one label");
  UncertaintyScore s;
  double h_sum = 0.0;
  for (float z : logits) {
    if (!std::isfinite(z)) throw ValidationError("non-finite logit");
    const double p = sigmoid(z);
    s.p_max = std::max(s.p_max, p);
    h_sum += binary_entropy(p);
  }
  s.entropy = h_sum / static_cast<double>(logits.size());
  s.uncertain = s.p_max < config.tau_p && s.entropy > config.tau_h;
  return s;
}

std::vector<UncertaintyScore> uncertainty_scores(const LogitMatrix& logits,
                                                 const ShiftConfig& config) {
  if (logits.labels() == 0) throw ValidationError("logit matrix has zero labels");
  std::vector<UncertaintyScore> out(logits.rows());
  parallel_for(logits.rows(),
               [&](std::size_t i) { out[i] = uncertainty(logits.row(i), config); });
  return out;
}

double feature_score(double distance, const SourceFeatureStats& stats) {
  const double f =
      (distance - stats.d_min()) / (stats.d_max() - stats.d_min() + stats.epsilon());
  return std::clamp(f, 0.0, 1.0);
}

std::vector<double> feature_scores(const EmbeddingMatrix& embeddings,
                                   const SourceFeatureStats& stats) {
  if (embeddings.rows() > 0 && embeddings.dim() != stats.dim()) {
    throw ValidationError(fmt::format("embedding dimension {} does not match stats dimension {}",
                                      embeddings.dim(), stats.dim()));
  }
  std::vector<double> out(embeddings.rows());
  parallel_for(embeddings.rows(), [&](std::size_t i) {
    out[i] = feature_score(mahalanobis(embeddings.row(i), stats), stats);
  });
  return out;
}

OntologyScore ontology_score(const std::vector<std::string>& concept_ids,
                             const ConceptStats& stats) {
  OntologyScore s;
  s.concept_count = concept_ids.size();
  if (concept_ids.empty()) return s;
  double sum = 0.0;
  for (const auto& c : concept_ids) sum += surprisal(c, stats);
  s.o_tail = sum / static_cast<double>(concept_ids.size());
  return s;
}

std::vector<OntologyScore> ontology_scores(const std::vector<Document>& docs,
                                           const ConceptMatcher& matcher,
                                           const ConceptStats& stats) {
  std::vector<OntologyScore> out(docs.size());
  parallel_for(docs.size(), [&](std::size_t i) {
    out[i] = ontology_score(matcher.match(docs[i].text).concept_ids, stats);
  });
  return out;
}

ShiftScores assemble_scores(const std::vector<std::string>& ids,
                            const std::vector<UncertaintyScore>& uncertainty,
                            const std::vector<double>& feature,
                            const std::vector<OntologyScore>& ontology) {
  if (uncertainty.size() != ids.size() || feature.size() != ids.size() ||
      ontology.size() != ids.size()) {
    throw ValidationError("score vectors are not aligned with document ids");
  }
  ShiftScores out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out[i].id = ids[i];
    out[i].p_max = uncertainty[i].p_max;
    out[i].entropy = uncertainty[i].entropy;
    out[i].uncertain = uncertainty[i].uncertain;
    out[i].feature = feature[i];
    out[i].o_tail = ontology[i].o_tail;
    out[i].concept_count = ontology[i].concept_count;
  }
  return out;
}

std::size_t top_count(double rho, std::size_t n) {
  const double x = rho * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::ceil(x - 1e-9)));
}

ShiftSet detect(const ShiftScores& scores, const ShiftConfig& config) {
  config.validate();
  ShiftSet set;
  if (scores.empty()) return set;
  for (const auto& s : scores) {
    if (s.uncertain) set.uncertain.push_back(s.id);
  }
  std::sort(set.uncertain.begin(), set.uncertain.end());
  const std::size_t k = top_count(config.rho, scores.size());
  set.feature = top_by(
      scores, k, [](const DocShiftScore& s) { return s.feature; },
      [](const DocShiftScore&) { return true; });
  set.ontology = top_by(
      scores, k, [](const DocShiftScore& s) { return s.o_tail; },
      [](const DocShiftScore& s) { return s.concept_count > 0; });
  set.shifted = set_union(set_union(set.uncertain, set.feature), set.ontology);
  return set;
}

OverlapReport overlap_report(const ShiftSet& set, std::size_t n) {
  OverlapReport r;
  r.n = n;
  r.u = set.uncertain.size();
  r.f = set.feature.size();
  r.o = set.ontology.size();
  const auto uo = set_intersection(set.uncertain, set.ontology);
  r.u_o = uo.size();
  r.u_f = set_intersection(set.uncertain, set.feature).size();
  r.o_f = set_intersection(set.ontology, set.feature).size();
  r.u_o_f = set_intersection(uo, set.feature).size();
  r.shifted = set.shifted.size();
  return r;
}

std::string OverlapReport::to_csv() const {
  std::string out = "n,U,O,F,U&O,U&F,O&F,U&O&F,shift\n";
  out += fmt::format("{},{},{},{},{},{},{},{},{}\n", n, u, o, f, u_o, u_f, o_f, u_o_f,
                     shifted);
  out += fmt::format("100.00,{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f}\n",
                     percent(u), percent(o), percent(f), percent(u_o), percent(u_f),
                     percent(o_f), percent(u_o_f), percent(shifted));
  return out;
}

std::string OverlapReport::to_table(const std::string& name) const {
  std::string out = fmt::format("{:<10} | {:>8} | {:>7} | {:>7} {:>7} {:>7} | {:>9}\n",
                                "Dataset", "|D_t|", "U", "U&O", "U&F", "O&F", "U&O&F");
  out += std::string(out.size() - 1, '-') + "\n";
  out += fmt::format("{:<10} | {:>8} | {:>6.2f}% | {:>6.2f}% {:>6.2f}% {:>6.2f}% | {:>8.2f}%\n",
                     name, n, percent(u), percent(u_o), percent(u_f), percent(o_f),
                     percent(u_o_f));
  return out;
}

SummaryStat summarize(std::vector<double> values) {
  SummaryStat s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  s.median = values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
  return s;
}

TrendReport trend_report(const ShiftScores& scores,
                         const std::map<std::string, int>& years) {
  struct Bucket {
    std::vector<double> f, o, h;
  };
  std::map<int, Bucket> by_year;
  for (const auto& s : scores) {
    auto it = years.find(s.id);
    if (it == years.end()) throw ValidationError("no year for document '" + s.id + "'");
    Bucket& b = by_year[it->second];
    b.f.push_back(s.feature);
    b.h.push_back(s.entropy);
    if (s.concept_count > 0) b.o.push_back(s.o_tail);
  }
  TrendReport report;
  for (auto& [year, b] : by_year) {
    TrendRow row;
    row.year = year;
    row.count = b.f.size();
    row.feature = summarize(std::move(b.f));
    row.ontology = summarize(std::move(b.o));
    row.entropy = summarize(std::move(b.h));
    report.rows.push_back(row);
  }
  return report;
}

std::string TrendReport::to_csv() const {
  std::string out = "year,count,f_mean,f_median,o_mean,o_median,h_mean,h_median\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", r.year, r.count,
                       r.feature.mean, r.feature.median, r.ontology.mean,
                       r.ontology.median, r.entropy.mean, r.entropy.median);
  }
  return out;
}

std::string TrendReport::to_table() const {
  std::string out = fmt::format("{:<6} | {:^13} | {:^13} | {:^13}\n", "", "F score", "O score",
                                "Entropy");
  out += fmt::format("{:<6} | {:>6} {:>6} | {:>6} {:>6} | {:>6} {:>6}\n", "Year", "mean",
                     "med.", "mean", "med.", "mean", "med.");
  out += std::string(54, '-') + "\n";
  for (const auto& r : rows) {
    out += fmt::format("{:<6} | {:>6.3f} {:>6.3f} | {:>6.3f} {:>6.3f} | {:>6.3f} {:>6.3f}\n",
                       r.year, r.feature.mean, r.feature.median, r.ontology.mean,
                       r.ontology.median, r.entropy.mean, r.entropy.median);
  }
  return out;
}

namespace {

std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\n\r") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t lineno) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", lineno);
  return fields;
}

constexpr const char* kScoresHeader =
    "id,p_max,entropy,U,F,O_tail,concept_count,zero_concepts,in_D_U,in_D_F,in_D_O,in_D_shift";

}  // namespace

std::string scores_to_csv(const ShiftScores& scores, const ShiftSet& set) {
  auto member = [](const std::vector<std::string>& v, const std::string& id) {
    return std::binary_search(v.begin(), v.end(), id) ? 1 : 0;
  };
  std::string out = std::string(kScoresHeader) + "\n";
  for (const auto& s : scores) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(s.id), s.p_max,
                       s.entropy, s.uncertain ? 1 : 0, s.feature, s.o_tail, s.concept_count,
                       s.concept_count == 0 ? 1 : 0, member(set.uncertain, s.id),
                       member(set.feature, s.id), member(set.ontology, s.id),
                       member(set.shifted, s.id));
  }
  return out;
}

std::pair<ShiftScores, ShiftSet> scores_from_csv(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  ShiftScores scores;
  ShiftSet set;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kScoresHeader) throw ParseError("unexpected score table header", lineno);
      header = true;
      continue;
    }
    const auto f = split_csv_line(line, lineno);
    if (f.size() != 12) throw ParseError("expected 12 fields", lineno);
    DocShiftScore s;
    s.id = f[0];
    try {
      s.p_max = std::stod(f[1]);
      s.entropy = std::stod(f[2]);
      s.uncertain = f[3] == "1";
      s.feature = std::stod(f[4]);
      s.o_tail = std::stod(f[5]);
      s.concept_count = std::stoul(f[6]);
    } catch (const std::logic_error&) {
      throw ParseError("malformed number", lineno);
    }
    if (f[8] == "1") set.uncertain.push_back(s.id);
    if (f[9] == "1") set.feature.push_back(s.id);
    if (f[10] == "1") set.ontology.push_back(s.id);
    if (f[11] == "1") set.shifted.push_back(s.id);
    scores.push_back(std::move(s));
  }
  if (!header) throw ParseError("missing score table header");
  for (auto* v : {&set.uncertain, &set.feature, &set.ontology, &set.shifted}) {
    std::sort(v->begin(), v->end());
  }
  return {std::move(scores), std::move(set)};
}

}  // namespace driftforge
