#include "driftforge/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "driftforge/error.h"
#include "driftforge/random.h"
#include "driftforge/text.h"
#include "json.hpp"

namespace driftforge {

using nlohmann::json;

Corpus::Corpus(std::vector<Document> docs, std::vector<std::string> label_vocab)
    : docs_(std::move(docs)), labels_(std::move(label_vocab)) {
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
  index_.reserve(docs_.size());
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    Document& d = docs_[i];
    if (d.id.empty()) throw ValidationError("document with empty id");
    if (d.text.empty()) {
      throw ValidationError("document '" + d.id + "' has empty text");
    }
    std::sort(d.labels.begin(), d.labels.end());
    d.labels.erase(std::unique(d.labels.begin(), d.labels.end()),
                   d.labels.end());
    for (const auto& l : d.labels) {
      if (!std::binary_search(labels_.begin(), labels_.end(), l)) {
        throw ValidationError("document '" + d.id + "' has unknown label '" +
                              l + "'");
      }
    }
    if (!index_.emplace(d.id, i).second) {
      throw ValidationError("duplicate document id '" + d.id + "'");
    }
  }
}

const Document* Corpus::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &docs_[it->second];
}

const Document& Corpus::at(const std::string& id) const {
  const Document* d = find(id);
  if (d == nullptr) throw ValidationError("unknown document id '" + id + "'");
  return *d;
}

Corpus Corpus::subset(const std::vector<std::string>& ids) const {
  std::vector<Document> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(at(id));
  return Corpus(std::move(out), labels_);
}

namespace {

Document parse_record(const std::string& line, std::size_t lineno) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
  }
  if (!j.is_object()) throw ParseError("record is not a JSON object", lineno);
  for (const char* key : {"id", "text", "year", "labels"}) {
    if (!j.contains(key)) {
      throw ParseError(std::string("missing field '") + key + "'", lineno);
    }
  }
  Document d;
  if (!j["id"].is_string()) throw ParseError("field 'id' must be a string", lineno);
  if (!j["text"].is_string()) {
    throw ParseError("field 'text' must be a string", lineno);
  }
  if (!j["year"].is_number_integer()) {
    throw ParseError("field 'year' must be an integer", lineno);
  }
  if (!j["labels"].is_array()) {
    throw ParseError("field 'labels' must be an array", lineno);
  }
  d.id = j["id"].get<std::string>();
  d.text = j["text"].get<std::string>();
  d.year = j["year"].get<int>();
  for (const auto& l : j["labels"]) {
    if (!l.is_string()) {
      throw ParseError("field 'labels' must contain strings", lineno);
    }
    d.labels.push_back(l.get<std::string>());
  }
  return d;
}

}  // namespace

Corpus parse_corpus(const std::string& jsonl, const LoadOptions& options) {
  std::istringstream in(jsonl);
  std::vector<Document> docs;
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen_labels;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty() || line.rfind("{\"meta\"", 0) == 0) continue;
    Document d = parse_record(line, lineno);
    seen_labels.insert(d.labels.begin(), d.labels.end());
    docs.push_back(std::move(d));
  }
  std::vector<std::string> vocab =
      options.label_vocab ? *options.label_vocab
                          : std::vector<std::string>(seen_labels.begin(),
                                                     seen_labels.end());
  return Corpus(std::move(docs), std::move(vocab));
}

Corpus load_corpus(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), options);
}

void write_corpus(const std::string& path, const std::vector<Document>& docs,
                  const std::string& meta_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  if (!meta_json.empty()) out << meta_json << '\n';
  for (const auto& d : docs) {
    json j = {{"id", d.id}, {"text", d.text}, {"year", d.year},
              {"labels", d.labels}};
    out << j.dump() << '\n';
  }
}

void TimePartition::validate() const {
  if (intervals.empty()) throw ConfigError("partition has no intervals");
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    if (intervals[i].begin >= intervals[i].end) {
      throw ConfigError("empty interval at index " + std::to_string(i));
    }
    if (i > 0 && intervals[i].begin < intervals[i - 1].end) {
      throw ConfigError("intervals overlap or are out of order at index " +
                        std::to_string(i));
    }
  }
  if (target_index >= intervals.size()) {
    throw ConfigError("target interval index out of range");
  }
  if (source_index >= target_index) {
    throw ConfigError("source interval must precede the target interval");
  }
}

YearRange parse_year_range(const std::string& spec) {
  const auto s = text::trim(spec);
  // Accept '-' or an en dash between the years.
  std::size_t dash = s.find('-', 1);
  std::size_t dash_len = 1;
  if (dash == std::string_view::npos) {
    dash = s.find("\xE2\x80\x93");
    dash_len = 3;
  }
  try {
    if (dash == std::string_view::npos) {
      const int y = std::stoi(std::string(s));
      return {y, y + 1};
    }
    const int a = std::stoi(std::string(text::trim(s.substr(0, dash))));
    const int b = std::stoi(std::string(text::trim(s.substr(dash + dash_len))));
    if (b < a) throw ConfigError("year range '" + spec + "' is reversed");
    return {a, b + 1};
  } catch (const std::logic_error&) {
    throw ConfigError("invalid year range '" + spec + "'");
  }
}

PartitionResult partition_by_time(const Corpus& corpus,
                                  const TimePartition& partition) {
  partition.validate();
  PartitionResult result;
  result.buckets.resize(partition.intervals.size());
  for (const auto& d : corpus.docs()) {
    bool placed = false;
    for (std::size_t i = 0; i < partition.intervals.size(); ++i) {
      if (partition.intervals[i].contains(d.year)) {
        result.buckets[i].push_back(d.id);
        placed = true;
        break;
      }
    }
    if (placed) continue;
    if (partition.strict) {
      throw ValidationError("document '" + d.id + "' year " +
                            std::to_string(d.year) + " is outside all intervals");
    }
    result.dropped.push_back(d.id);
  }
  if (!result.dropped.empty()) {
    std::cerr << "warning: dropped " << result.dropped.size()
              << " document(s) outside all intervals\n";
  }
  return result;
}

Split split_train_test(const std::vector<std::string>& ids, double ratio,
                       std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError("split ratio must lie in (0, 1)");
  }
  if (ids.empty()) throw ValidationError("cannot split an empty id list");
  std::vector<std::string> order(ids);
  std::sort(order.begin(), order.end());
  if (std::adjacent_find(order.begin(), order.end()) != order.end()) {
    throw ValidationError("duplicate ids passed to split");
  }
  Rng rng(mix64(seed));
  rng.shuffle(order);
  // Nudge before flooring so 0.7 * 10 style products land on the intended
  // integer despite binary representation error.
  const auto n = static_cast<double>(order.size());
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * n + 0.5 + 1e-9));
  Split split;
  split.seed = seed;
  split.train_ids.assign(order.begin(), order.begin() + n_train);
  split.test_ids.assign(order.begin() + n_train, order.end());
  return split;
}

}  // namespace driftforge
