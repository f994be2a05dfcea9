#ifndef DRIFTFORGE_CORPUS_H_
#define DRIFTFORGE_CORPUS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace driftforge {

// One timestamped, multi-labeled text unit.
struct Document {
  std::string id;
  std::string text;
  int year = 0;
  std::vector<std::string> labels;  // sorted, unique
};

// Documents plus the fixed label vocabulary they draw from.
class Corpus {
 public:
  Corpus() = default;
  // Validates the Document invariants; throws ValidationError.
  Corpus(std::vector<Document> docs, std::vector<std::string> label_vocab);

  const std::vector<Document>& docs() const { return docs_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }

  const Document* find(const std::string& id) const;
  const Document& at(const std::string& id) const;  // throws ValidationError

  // Sub-corpus over `ids`, in the given order, sharing the label vocabulary.
  Corpus subset(const std::vector<std::string>& ids) const;

 private:
  std::vector<Document> docs_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct LoadOptions {
  // When set, labels outside this vocabulary are rejected. Otherwise the
  // vocabulary is the sorted set of labels seen in the file.
  std::optional<std::vector<std::string>> label_vocab;
};

// Reads JSON Lines with keys id, text, year, labels. Throws ParseError with
// the line number for malformed records and ValidationError for duplicate
// ids, unknown labels, or empty text. A leading {"meta": ...} line is skipped.
Corpus load_corpus(const std::string& path, const LoadOptions& options = {});
Corpus parse_corpus(const std::string& jsonl, const LoadOptions& options = {});

void write_corpus(const std::string& path, const std::vector<Document>& docs,
                  const std::string& meta_json = "");

// Half-open [begin, end) year range.
struct YearRange {
  int begin;
  int end;
  bool contains(int year) const { return year >= begin && year < end; }
};

struct TimePartition {
  std::vector<YearRange> intervals;
  std::size_t source_index = 0;
  std::size_t target_index = 1;
  bool strict = false;

  // Throws ConfigError when intervals overlap, are unordered, or the
  // source/target indices are out of order or range.
  void validate() const;
};

// Parses "2008-2010" (inclusive years) into [2008, 2011).
YearRange parse_year_range(const std::string& spec);

struct PartitionResult {
  std::vector<std::vector<std::string>> buckets;  // one per interval
  std::vector<std::string> dropped;
};

// Buckets document ids by interval, keeping corpus order within each bucket.
// Out-of-range documents are dropped with a warning on stderr, or raise
// ValidationError when the partition is strict.
PartitionResult partition_by_time(const Corpus& corpus,
                                  const TimePartition& partition);

struct Split {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
};

// Uniform (unstratified) random split. |train| = round-half-up(ratio * N).
// Result depends only on the id set, the ratio and the seed.
Split split_train_test(const std::vector<std::string>& ids, double ratio,
                       std::uint64_t seed);

}  // namespace driftforge

#endif  // DRIFTFORGE_CORPUS_H_
