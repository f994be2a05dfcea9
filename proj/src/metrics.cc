#include "driftforge/metrics.h"

#include <algorithm>
#include <iterator>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "driftforge/error.h"
#include "driftforge/text.h"
#include "json.hpp"

namespace driftforge {

using nlohmann::json;

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

MetricsReport evaluate(const LabelSets& predictions, const LabelSets& gold,
                       const std::vector<std::string>& labels) {
  if (predictions.size() != gold.size()) {
    throw ValidationError("prediction and gold id sets differ in size");
  }
  MetricsReport report;
  std::set<std::string> vocab(labels.begin(), labels.end());
  const bool fixed_vocab = !labels.empty();
  double sum_p = 0.0, sum_r = 0.0, sum_f = 0.0;
  for (const auto& [id, gold_raw] : gold) {
    auto it = predictions.find(id);
    if (it == predictions.end()) {
      throw ValidationError("no prediction for document '" + id + "'");
    }
    const auto g = sorted_unique(gold_raw);
    const auto p = sorted_unique(it->second);
    std::vector<std::string> hit;
    std::set_intersection(g.begin(), g.end(), p.begin(), p.end(), std::back_inserter(hit));
    const double prec = ratio(hit.size(), p.size());
    const double rec = ratio(hit.size(), g.size());
    sum_p += prec;
    sum_r += rec;
    sum_f += f1(prec, rec);
    for (const auto& l : g) {
      if (!fixed_vocab) vocab.insert(l);
      auto& c = report.per_label[l];
      if (std::binary_search(p.begin(), p.end(), l)) {
        ++c.tp;
      } else {
        ++c.fn;
      }
    }
    for (const auto& l : p) {
      if (!fixed_vocab) vocab.insert(l);
      if (!std::binary_search(g.begin(), g.end(), l)) ++report.per_label[l].fp;
    }
  }
  report.n_docs = gold.size();
  if (report.n_docs == 0) return report;
  const auto n = static_cast<double>(report.n_docs);
  report.sample_precision = 100.0 * sum_p / n;
  report.sample_recall = 100.0 * sum_r / n;
  report.sample_f1 = 100.0 * sum_f / n;

  LabelCounts pooled;
  double macro_sum = 0.0;
  for (const auto& l : vocab) {
    const LabelCounts c = report.per_label[l];
    pooled.tp += c.tp;
    pooled.fp += c.fp;
    pooled.fn += c.fn;
    macro_sum += f1(ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn));
  }
  // Labels outside a fixed vocabulary still count toward the pooled totals.
  for (const auto& [l, c] : report.per_label) {
    if (vocab.count(l) != 0) continue;
    pooled.tp += c.tp;
    pooled.fp += c.fp;
    pooled.fn += c.fn;
  }
  report.micro_f1 =
      100.0 * f1(ratio(pooled.tp, pooled.tp + pooled.fp), ratio(pooled.tp, pooled.tp + pooled.fn));
  report.macro_f1 = vocab.empty() ? 0.0 : 100.0 * macro_sum / static_cast<double>(vocab.size());
  return report;
}

std::string MetricsReport::to_table() const {
  std::string out = fmt::format("{:>8} {:>8} {:>8} {:>8} {:>8}\n", "P", "R", "sa-F1", "mi-F1",
                                "ma-F1");
  out += fmt::format("{:>8.2f} {:>8.2f} {:>8.2f} {:>8.2f} {:>8.2f}\n", sample_precision,
                     sample_recall, sample_f1, micro_f1, macro_f1);
  return out;
}

std::string MetricsReport::to_json() const {
  json labels = json::object();
  for (const auto& [l, c] : per_label) labels[l] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}};
  return json{{"n_docs", n_docs},
              {"sample_precision", sample_precision},
              {"sample_recall", sample_recall},
              {"sample_f1", sample_f1},
              {"micro_f1", micro_f1},
              {"macro_f1", macro_f1},
              {"per_label", labels}}
      .dump(1);
}

LabelSets label_sets_from_jsonl(const std::string& content) {
  LabelSets sets;
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
    if (!j.contains("id") || !j.contains("labels") || !j["labels"].is_array()) {
      throw ParseError("record needs 'id' and a 'labels' array", lineno);
    }
    const auto id = j["id"].get<std::string>();
    if (!sets.emplace(id, j["labels"].get<std::vector<std::string>>()).second) {
      throw ValidationError("duplicate id '" + id + "' on line " + std::to_string(lineno));
    }
  }
  return sets;
}

std::string label_sets_to_jsonl(const LabelSets& sets) {
  std::string out;
  for (const auto& [id, labels] : sets) {
    out += json{{"id", id}, {"labels", labels}}.dump() + "\n";
  }
  return out;
}

}  // namespace driftforge
