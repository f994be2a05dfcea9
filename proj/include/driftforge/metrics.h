#ifndef DRIFTFORGE_METRICS_H_
#define DRIFTFORGE_METRICS_H_

#include <map>
#include <string>
#include <vector>

namespace driftforge {

// Per-document label sets keyed by document id.
using LabelSets = std::map<std::string, std::vector<std::string>>;

struct LabelCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

// All scores in percent.
struct MetricsReport {
  std::size_t n_docs = 0;
  double sample_precision = 0.0;
  double sample_recall = 0.0;
  double sample_f1 = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::map<std::string, LabelCounts> per_label;

  std::string to_table() const;
  std::string to_json() const;
};

// `labels` is the label vocabulary for macro averaging; labels absent from
// both gold and predictions count as F1 = 0. When empty, the union of labels
// present in either side is used. Throws ValidationError when the id sets
// differ.
MetricsReport evaluate(const LabelSets& predictions, const LabelSets& gold,
                       const std::vector<std::string>& labels = {});

LabelSets label_sets_from_jsonl(const std::string& content);
std::string label_sets_to_jsonl(const LabelSets& sets);

}  // namespace driftforge

#endif  // DRIFTFORGE_METRICS_H_
