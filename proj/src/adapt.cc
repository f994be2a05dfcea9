#include "driftforge/adapt.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <iterator>
#include <set>

#include "driftforge/error.h"
#include "driftforge/random.h"
#include "driftforge/text.h"
#include "json.hpp"

namespace driftforge {

using nlohmann::json;

void AdaptConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (k < 1) throw ConfigError("k must be at least 1");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must be in (0, 1)");
  shift.validate();
  augment.validate();
}

std::string digest_hex(std::string_view bytes) {
  return fmt::format("{:016x}", fnv1a(bytes));
}

std::uint64_t batch_seed(std::uint64_t seed, std::size_t index) {
  return derive_seed(seed, "augment-batch", index);
}

// ---------------------------------------------------------------- log

std::string BatchRecord::to_json() const {
  json rets = json::array();
  for (const auto& r : retrievals) {
    json ns = json::array();
    for (const auto& n : r.neighbors) ns.push_back({{"source_id", n.source_id}, {"sim", n.similarity}});
    rets.push_back({{"target_id", r.target_id}, {"neighbors", ns}});
  }
  json j{{"batch", index},
         {"doc_ids", doc_ids},
         {"n_docs", doc_ids.size()},
         {"n_shift", sets.shifted.size()},
         {"D_U", sets.uncertain},
         {"D_F", sets.feature},
         {"D_O", sets.ontology},
         {"D_shift", sets.shifted},
         {"retrievals", rets},
         {"samples_sent", samples_sent},
         {"version_before", version_before},
         {"version_after", version_after},
         {"updated", updated},
         {"augment_seed", augment_seed},
         {"batch_digest", batch_digest}};
  return j.dump();
}

BatchRecord BatchRecord::from_json(const std::string& line) {
  BatchRecord r;
  try {
    const json j = json::parse(line);
    r.index = j.at("batch").get<std::size_t>();
    r.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
    r.sets.uncertain = j.at("D_U").get<std::vector<std::string>>();
    r.sets.feature = j.at("D_F").get<std::vector<std::string>>();
    r.sets.ontology = j.at("D_O").get<std::vector<std::string>>();
    r.sets.shifted = j.at("D_shift").get<std::vector<std::string>>();
    for (const auto& rj : j.at("retrievals")) {
      RetrievalResult res;
      res.target_id = rj.at("target_id").get<std::string>();
      for (const auto& nj : rj.at("neighbors")) {
        res.neighbors.push_back({nj.at("source_id").get<std::string>(), nj.at("sim").get<double>()});
      }
      r.retrievals.push_back(std::move(res));
    }
    r.samples_sent = j.at("samples_sent").get<std::size_t>();
    r.version_before = j.at("version_before").get<std::uint64_t>();
    r.version_after = j.at("version_after").get<std::uint64_t>();
    r.updated = j.at("updated").get<bool>();
    r.augment_seed = j.at("augment_seed").get<std::uint64_t>();
    r.batch_digest = j.at("batch_digest").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid adaptation log record: ") + e.what());
  }
  return r;
}

AugmentedBatch replay_batch(const BatchRecord& record, const Corpus& source,
                            const ConceptMatcher& matcher, const AugmentConfig& config) {
  AugmentConfig c = config;
  c.seed = record.augment_seed;
  return augment_batch(record.retrievals, source, matcher, c);
}

// ---------------------------------------------------------------- loop

namespace {

LabelSets to_label_sets(const IdMatrix& probs, const std::vector<std::string>& labels,
                        double threshold) {
  const auto sets = threshold_predictions(probs, labels, threshold);
  LabelSets out;
  for (std::size_t i = 0; i < probs.rows(); ++i) out[probs.ids()[i]] = sets[i];
  return out;
}

LabelSets gold_sets(const std::vector<Document>& docs) {
  LabelSets out;
  for (const auto& d : docs) out[d.id] = d.labels;
  return out;
}

void check_inputs(const AdaptInputs& in) {
  if (in.source == nullptr || in.matcher == nullptr || in.feature_stats == nullptr ||
      in.concept_stats == nullptr) {
    throw ConfigError("adaptation inputs are incomplete");
  }
  if (in.source->empty()) throw ValidationError("source corpus is empty");
}

ShiftScores score_batch(const std::vector<Document>& docs, const EncodeResult& enc,
                        const std::vector<OntologyScore>& ontology,
                        const SourceFeatureStats& feature_stats, const ShiftConfig& config) {
  std::vector<std::string> ids;
  ids.reserve(docs.size());
  for (const auto& d : docs) ids.push_back(d.id);
  return assemble_scores(ids, uncertainty_scores(enc.logits, config),
                         feature_scores(enc.embeddings, feature_stats), ontology);
}

void union_into(std::vector<std::string>& acc, const std::vector<std::string>& add) {
  std::vector<std::string> merged;
  std::set_union(acc.begin(), acc.end(), add.begin(), add.end(), std::back_inserter(merged));
  acc = std::move(merged);
}

}  // namespace

ShiftSet detect_per_batch(const ShiftScores& scores, std::size_t batch_size,
                          const ShiftConfig& config) {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  ShiftSet total;
  for (std::size_t b = 0; b < scores.size(); b += batch_size) {
    const ShiftScores part(scores.begin() + static_cast<std::ptrdiff_t>(b),
                           scores.begin() + static_cast<std::ptrdiff_t>(std::min(scores.size(), b + batch_size)));
    const ShiftSet s = detect(part, config);
    union_into(total.uncertain, s.uncertain);
    union_into(total.feature, s.feature);
    union_into(total.ontology, s.ontology);
    union_into(total.shifted, s.shifted);
  }
  return total;
}

AdaptResult run_adaptation(const AdaptInputs& inputs, const AdaptConfig& config,
                           Trainer& trainer, const BatchSink& sink) {
  config.validate();
  check_inputs(inputs);
  const auto& labels = trainer.labels();
  const auto& source_docs = inputs.source->docs();

  AdaptResult result;
  result.initial = trainer.handle();
  if (config.evaluate_baseline && !inputs.target.empty()) {
    result.baseline_predictions =
        to_label_sets(trainer.predict(inputs.target), labels, config.threshold);
    result.baseline = evaluate(*result.baseline_predictions, gold_sets(inputs.target), labels);
  }

  // Concept detection does not depend on the model.
  const std::vector<OntologyScore> ontology =
      ontology_scores(inputs.target, *inputs.matcher, *inputs.concept_stats);

  std::optional<EmbeddingMatrix> source_emb;
  std::uint64_t source_version = 0;

  for (std::size_t b = 0, index = 0; b < inputs.target.size(); b += config.batch_size, ++index) {
    const std::size_t end = std::min(inputs.target.size(), b + config.batch_size);
    const std::vector<Document> batch(inputs.target.begin() + static_cast<std::ptrdiff_t>(b),
                                      inputs.target.begin() + static_cast<std::ptrdiff_t>(end));
    const std::vector<OntologyScore> batch_ontology(
        ontology.begin() + static_cast<std::ptrdiff_t>(b),
        ontology.begin() + static_cast<std::ptrdiff_t>(end));

    BatchRecord rec;
    rec.index = index;
    for (const auto& d : batch) rec.doc_ids.push_back(d.id);
    rec.version_before = trainer.handle().version;
    rec.version_after = rec.version_before;
    rec.augment_seed = batch_seed(config.seed, index);

    const EncodeResult enc = trainer.encode(batch);
    const ShiftScores scores =
        score_batch(batch, enc, batch_ontology, *inputs.feature_stats, config.shift);
    rec.sets = detect(scores, config.shift);

    if (!rec.sets.shifted.empty()) {
      if (!source_emb || source_version != rec.version_before) {
        source_emb = trainer.encode(source_docs).embeddings;
        source_version = rec.version_before;
      }
      rec.retrievals = retrieve_topk(rec.sets.shifted, enc.embeddings, *source_emb, config.k);
      AugmentConfig aug = config.augment;
      aug.seed = rec.augment_seed;
      const AugmentedBatch out = augment_batch(rec.retrievals, *inputs.source, *inputs.matcher, aug);
      rec.samples_sent = out.samples.size();
      if (!out.samples.empty()) {
        rec.batch_digest = digest_hex(batch_to_jsonl(out));
        const ModelHandle h = trainer.update(out);
        if (h.version <= rec.version_before) {
          throw TrainerError("trainer version did not increase after an update");
        }
        rec.version_after = h.version;
        rec.updated = true;
        ++result.updates;
      }
    }
    result.batches.push_back(rec);
    if (sink) sink(rec);
  }

  result.final = trainer.handle();
  if (!inputs.target.empty()) {
    result.predictions = to_label_sets(trainer.predict(inputs.target), labels, config.threshold);
  }
  result.adapted = evaluate(result.predictions, gold_sets(inputs.target), labels);
  return result;
}

// ---------------------------------------------------------------- sweep

std::vector<double> parse_param_values(const std::string& spec) {
  const std::string s(text::trim(spec));
  std::vector<double> out;
  const auto range = s.find("..");
  try {
    if (range != std::string::npos) {
      std::size_t pos = 0;
      const long lo = std::stol(s.substr(0, range), &pos);
      const std::string hi_str = s.substr(range + 2);
      const long hi = std::stol(hi_str, &pos);
      if (pos != hi_str.size() || hi < lo) throw ConfigError("bad range '" + s + "'");
      for (long v = lo; v <= hi; ++v) out.push_back(static_cast<double>(v));
      return out;
    }
    std::size_t start = 0;
    while (start <= s.size()) {
      const auto comma = s.find(',', start);
      const std::string item(text::trim(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw ConfigError("bad value '" + item + "'");
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse parameter values '" + s + "'");
  }
  return out;
}

std::vector<SweepPoint> run_sweep(const AdaptInputs& inputs, const AdaptConfig& base,
                                  const std::string& param, const std::vector<double>& values,
                                  const TrainerFactory& factory) {
  if (param != "k" && param != "rho") throw ConfigError("sweep parameter must be k or rho");
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  check_inputs(inputs);
  std::vector<SweepPoint> points;
  for (double v : values) {
    AdaptConfig cfg = base;
    cfg.evaluate_baseline = false;
    if (param == "k") {
      if (v < 1 || v != std::floor(v)) throw ConfigError("k values must be positive integers");
      cfg.k = static_cast<std::size_t>(v);
    } else {
      cfg.shift.rho = v;
    }
    cfg.validate();
    std::unique_ptr<Trainer> trainer = factory();

    SweepPoint p;
    p.param = param;
    p.value = v;
    p.k = cfg.k;
    p.rho = cfg.shift.rho;
    if (!inputs.target.empty()) {
      const EncodeResult enc = trainer->encode(inputs.target);
      const auto ontology = ontology_scores(inputs.target, *inputs.matcher, *inputs.concept_stats);
      const ShiftScores scores =
          score_batch(inputs.target, enc, ontology, *inputs.feature_stats, cfg.shift);
      p.shifted_source_model = detect_per_batch(scores, cfg.batch_size, cfg.shift).shifted.size();
    }
    const AdaptResult r = run_adaptation(inputs, cfg, *trainer);
    p.metrics = r.adapted;
    p.updates = r.updates;
    for (const auto& b : r.batches) p.shifted_loop += b.sets.shifted.size();
    points.push_back(std::move(p));
  }
  return points;
}

namespace {

std::string column_name(const SweepPoint& p) {
  return p.param == "k" ? fmt::format("k={}", p.k) : fmt::format("rho={:g}", p.rho);
}

}  // namespace

std::string sweep_table(const std::vector<SweepPoint>& points) {
  std::string out = fmt::format("{:<22}", "Metric");
  for (const auto& p : points) out += fmt::format(" | {:>9}", column_name(p));
  out += "\n" + std::string(22 + points.size() * 12, '=') + "\n";
  const auto row = [&](const std::string& name, auto get, bool integral) {
    out += fmt::format("{:<22}", name);
    for (const auto& p : points) {
      if (integral) {
        out += fmt::format(" | {:>9}", static_cast<std::size_t>(get(p)));
      } else {
        out += fmt::format(" | {:>9.2f}", get(p));
      }
    }
    out += "\n";
  };
  row("P", [](const SweepPoint& p) { return p.metrics.sample_precision; }, false);
  row("R", [](const SweepPoint& p) { return p.metrics.sample_recall; }, false);
  row("sa-F1", [](const SweepPoint& p) { return p.metrics.sample_f1; }, false);
  row("mi-F1", [](const SweepPoint& p) { return p.metrics.micro_f1; }, false);
  row("ma-F1", [](const SweepPoint& p) { return p.metrics.macro_f1; }, false);
  out += std::string(22 + points.size() * 12, '-') + "\n";
  row("|D_shift| (source)", [](const SweepPoint& p) { return static_cast<double>(p.shifted_source_model); }, true);
  row("|D_shift| (loop)", [](const SweepPoint& p) { return static_cast<double>(p.shifted_loop); }, true);
  row("updates", [](const SweepPoint& p) { return static_cast<double>(p.updates); }, true);
  return out;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::string out = "param,value,k,rho,P,R,sa_f1,mi_f1,ma_f1,shifted_source,shifted_loop,updates\n";
  for (const auto& p : points) {
    out += fmt::format("{},{:g},{},{:g},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{},{},{}\n", p.param,
                       p.value, p.k, p.rho, p.metrics.sample_precision, p.metrics.sample_recall,
                       p.metrics.sample_f1, p.metrics.micro_f1, p.metrics.macro_f1,
                       p.shifted_source_model, p.shifted_loop, p.updates);
  }
  return out;
}

}  // namespace driftforge
