// driftforge command line: one subcommand per pipeline stage.
//
// Every setting can come from a key/value config file (--config) or from a
// flag; flags win. Each written artifact carries the resolved config hash and
// the seed, so identical inputs give byte-identical outputs.

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "driftforge/adapt.h"
#include "driftforge/augment.h"
#include "driftforge/config.h"
#include "driftforge/corpus.h"
#include "driftforge/error.h"
#include "driftforge/experiment.h"
#include "driftforge/lexicon.h"
#include "driftforge/matrix_io.h"
#include "driftforge/metrics.h"
#include "driftforge/retrieval.h"
#include "driftforge/shift.h"
#include "driftforge/stats.h"
#include "driftforge/synthetic.h"
#include "driftforge/text.h"
#include "driftforge/trainer.h"
#include "json.hpp"

namespace df = driftforge;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultSeed = 7;

// Flags mirror config keys. Only flags given on the command line override the
// file, so defaults stay in one place (the reading code).
class Settings {
 public:
  void option(CLI::App* app, const std::string& flag, const std::string& key,
              const std::string& help) {
    CLI::Option* opt = app->add_option(flag, values_[key], help + "  [config: " + key + "]");
    bound_.push_back({opt, key, false});
  }
  void flag(CLI::App* app, const std::string& flag, const std::string& key,
            const std::string& help) {
    CLI::Option* opt = app->add_flag(flag)->description(help + "  [config: " + key + " = true]");
    bound_.push_back({opt, key, true});
  }
  void config_option(CLI::App* app) {
    app->add_option("--config", config_path_, "key/value settings file; flags override it");
  }

  df::KeyValueConfig resolve() const {
    df::KeyValueConfig cfg;
    if (!config_path_.empty()) cfg = df::KeyValueConfig::load(config_path_);
    for (const auto& b : bound_) {
      if (b.opt->count() == 0) continue;
      cfg.set(b.key, b.is_flag ? "true" : values_.at(b.key));
    }
    return cfg;
  }

 private:
  struct Binding {
    CLI::Option* opt;
    std::string key;
    bool is_flag;
  };
  std::map<std::string, std::string> values_;
  std::vector<Binding> bound_;
  std::string config_path_;
};

std::uint64_t seed_of(const df::KeyValueConfig& cfg) {
  const auto s = cfg.get_int("seed", static_cast<std::int64_t>(kDefaultSeed));
  if (s < 0) throw df::ConfigError("seed must be nonnegative");
  return static_cast<std::uint64_t>(s);
}

std::string meta_line(const std::string& command, const df::KeyValueConfig& cfg) {
  json m = {{"meta",
             {{"tool", "driftforge"},
              {"command", command},
              {"config_hash", cfg.hash()},
              {"seed", seed_of(cfg)}}}};
  return m.dump();
}

std::string required(const df::KeyValueConfig& cfg, const std::string& key) {
  auto v = cfg.get(key);
  if (!v || v->empty()) throw df::ConfigError("missing required setting '" + key + "'");
  return *v;
}

std::string input_path(const df::KeyValueConfig& cfg, const std::string& key) {
  std::string p = required(cfg, key);
  if (!fs::exists(p)) throw df::IoError("'" + key + "' names a missing file: " + p);
  return p;
}

std::optional<std::string> optional_input(const df::KeyValueConfig& cfg, const std::string& key) {
  auto v = cfg.get(key);
  if (!v || v->empty()) return std::nullopt;
  if (!fs::exists(*v)) throw df::IoError("'" + key + "' names a missing file: " + *v);
  return v;
}

std::vector<std::string> list_of(const df::KeyValueConfig& cfg, const std::string& key) {
  std::vector<std::string> out;
  std::stringstream ss(cfg.get_string(key, ""));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t(df::text::trim(item));
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::size_t count_of(const df::KeyValueConfig& cfg, const std::string& key, std::int64_t fallback) {
  const auto v = cfg.get_int(key, fallback);
  if (v < 0) throw df::ConfigError("'" + key + "' must be nonnegative");
  return static_cast<std::size_t>(v);
}

fs::path out_dir(const df::KeyValueConfig& cfg) {
  fs::path dir = cfg.get_string("out_dir", ".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw df::IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& content) {
  df::write_binary_file(path.string(), content);
}

// Prefixes a CSV or text table with its metadata as a comment line.
std::string with_meta_comment(const std::string& meta, const std::string& body) {
  return "# " + meta + "\n" + body;
}

df::ShiftConfig shift_config(const df::KeyValueConfig& cfg) {
  df::ShiftConfig s;
  s.rho = cfg.get_double("shift.rho", s.rho);
  s.tau_p = cfg.get_double("shift.tau_p", s.tau_p);
  s.tau_h = cfg.get_double("shift.tau_h", s.tau_h);
  s.validate();
  return s;
}

df::AugmentConfig augment_config(const df::KeyValueConfig& cfg) {
  df::AugmentConfig a;
  a.variants = static_cast<int>(cfg.get_int("augment.variants", a.variants));
  a.max_subs = static_cast<int>(cfg.get_int("augment.max_subs", a.max_subs));
  a.include_originals = cfg.get_bool("augment.include_originals", a.include_originals);
  a.dedupe_sources = cfg.get_bool("augment.dedupe_sources", a.dedupe_sources);
  a.prefer_llm = cfg.get_bool("augment.prefer_llm", a.prefer_llm);
  a.seed = static_cast<std::uint64_t>(cfg.get_int("augment.seed", static_cast<std::int64_t>(seed_of(cfg))));
  a.validate();
  return a;
}

df::AdaptConfig adapt_config(const df::KeyValueConfig& cfg) {
  df::AdaptConfig a;
  a.batch_size = count_of(cfg, "adapt.batch_size", static_cast<std::int64_t>(a.batch_size));
  a.k = count_of(cfg, "adapt.k", static_cast<std::int64_t>(a.k));
  a.threshold = cfg.get_double("adapt.threshold", a.threshold);
  a.evaluate_baseline = cfg.get_bool("adapt.baseline", a.evaluate_baseline);
  a.shift = shift_config(cfg);
  a.augment = augment_config(cfg);
  a.seed = seed_of(cfg);
  a.validate();
  return a;
}

df::StubConfig stub_config(const df::KeyValueConfig& cfg) {
  df::StubConfig s;
  s.hash_dim = count_of(cfg, "stub.hash_dim", static_cast<std::int64_t>(s.hash_dim));
  s.embed_dim = count_of(cfg, "stub.embed_dim", static_cast<std::int64_t>(s.embed_dim));
  s.learning_rate = cfg.get_double("stub.lr", s.learning_rate);
  s.l2 = cfg.get_double("stub.l2", s.l2);
  s.epochs_per_update = static_cast<int>(cfg.get_int("stub.update_epochs", s.epochs_per_update));
  s.seed = static_cast<std::uint64_t>(cfg.get_int("stub.seed", static_cast<std::int64_t>(seed_of(cfg))));
  s.frozen = cfg.get_bool("stub.frozen", false);
  return s;
}

int stub_epochs(const df::KeyValueConfig& cfg) {
  return static_cast<int>(cfg.get_int("stub.epochs", 10));
}

df::SyntheticExperimentConfig synthetic_config(const df::KeyValueConfig& cfg) {
  df::SyntheticExperimentConfig e;
  auto& s = e.synthetic;
  s.seed = seed_of(cfg);
  s.labels = count_of(cfg, "synthetic.labels", static_cast<std::int64_t>(s.labels));
  s.terms_per_label = count_of(cfg, "synthetic.terms_per_label", static_cast<std::int64_t>(s.terms_per_label));
  s.drift_fraction = cfg.get_double("synthetic.drift_fraction", s.drift_fraction);
  s.term_skew = cfg.get_double("synthetic.term_skew", s.term_skew);
  s.anchor_repeats = count_of(cfg, "synthetic.anchor_repeats", static_cast<std::int64_t>(s.anchor_repeats));
  s.docs_per_period = count_of(cfg, "synthetic.docs_per_period", static_cast<std::int64_t>(s.docs_per_period));
  s.multi_label_rate = cfg.get_double("synthetic.multi_label_rate", s.multi_label_rate);
  e.stub = stub_config(cfg);
  e.source_epochs = stub_epochs(cfg);
  e.train_ratio = cfg.get_double("ratio", e.train_ratio);
  e.adapt = adapt_config(cfg);
  return e;
}

// External trainer when trainer.command is set, otherwise the stub fitted on
// the labeled source corpus.
std::unique_ptr<df::Trainer> make_trainer(const df::KeyValueConfig& cfg, const df::Corpus* source,
                                          const fs::path& work_dir) {
  const std::string command = cfg.get_string("trainer.command", "");
  if (!command.empty()) return std::make_unique<df::ProcessTrainer>(command, work_dir.string());
  if (source == nullptr) throw df::ConfigError("the built-in stub trainer needs a labeled 'source' corpus");
  auto t = std::make_unique<df::StubTrainer>(source->labels(), stub_config(cfg));
  t->fit_source(source->docs(), stub_epochs(cfg));
  return t;
}

// Source, target, lexicon and source statistics for adapt and sweep. Either
// the in-repo synthetic corpus or files named in the config.
class RunData {
 public:
  RunData(const df::KeyValueConfig& cfg, const fs::path& work_dir) : cfg_(cfg), work_dir_(work_dir) {
    if (cfg.get_bool("synthetic", false)) {
      synthetic_ = std::make_unique<df::SyntheticSetup>(synthetic_config(cfg));
      return;
    }
    source_ = df::load_corpus(input_path(cfg, "source"));
    target_ = df::load_corpus(input_path(cfg, "target"));
    lexicon_ = std::make_unique<df::ConceptLexicon>(df::load_lexicon(input_path(cfg, "lexicon")));
    matcher_ = std::make_unique<df::ConceptMatcher>(*lexicon_);
    if (auto p = optional_input(cfg, "stats")) {
      df::SourceStats st = df::read_stats(*p);
      if (st.feature) feature_.emplace(std::move(*st.feature));
      if (st.concepts) concepts_ = std::move(*st.concepts);
    }
    if (!feature_) {
      auto t = make_trainer(cfg, &source_, work_dir);
      feature_.emplace(df::fit_feature_stats(t->encode(source_.docs()).embeddings,
                                             cfg.get_double("shrinkage", df::kDefaultShrinkage)));
    }
    if (!concepts_) concepts_ = df::fit_concept_stats(source_.docs(), *matcher_);
  }

  df::AdaptInputs inputs() const {
    if (synthetic_) return synthetic_->inputs();
    return df::AdaptInputs{target_.docs(), &source_, matcher_.get(), &*feature_, &*concepts_};
  }

  std::unique_ptr<df::Trainer> trainer() const {
    if (synthetic_ && cfg_.get_string("trainer.command", "").empty()) {
      return synthetic_->make_trainer(cfg_.get_bool("stub.frozen", false));
    }
    return make_trainer(cfg_, synthetic_ ? &synthetic_->source() : &source_, work_dir_);
  }

  const df::SyntheticSetup* synthetic() const { return synthetic_.get(); }

 private:
  df::KeyValueConfig cfg_;
  fs::path work_dir_;
  std::unique_ptr<df::SyntheticSetup> synthetic_;
  df::Corpus source_;
  df::Corpus target_;
  std::unique_ptr<df::ConceptLexicon> lexicon_;
  std::unique_ptr<df::ConceptMatcher> matcher_;
  std::optional<df::SourceFeatureStats> feature_;
  std::optional<df::ConceptStats> concepts_;
};

// ------------------------------------------------------------- subcommands

df::TimePartition load_partition(const df::KeyValueConfig& cfg) {
  const df::KeyValueConfig file = df::KeyValueConfig::load(input_path(cfg, "partition"));
  auto get = [&](const std::string& key) {
    auto v = file.get(key);
    return v ? v : file.get("partition." + key);
  };
  df::TimePartition p;
  const auto intervals = get("intervals");
  if (!intervals) throw df::ConfigError("partition file needs 'intervals'");
  std::stringstream ss(*intervals);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!df::text::trim(item).empty()) p.intervals.push_back(df::parse_year_range(std::string(df::text::trim(item))));
  }
  auto index = [&](const std::string& key, std::size_t fallback) {
    auto v = get(key);
    if (!v) return fallback;
    try {
      return static_cast<std::size_t>(std::stoul(*v));
    } catch (const std::logic_error&) {
      throw df::ConfigError("partition '" + key + "' must be an interval index");
    }
  };
  p.source_index = index("source", 0);
  p.target_index = index("target", p.intervals.empty() ? 0 : p.intervals.size() - 1);
  const auto strict = get("strict");
  p.strict = cfg.get_bool("strict", strict && (*strict == "true" || *strict == "1" || *strict == "yes"));
  p.validate();
  return p;
}

int cmd_ingest(const df::KeyValueConfig& cfg) {
  const df::Corpus corpus = df::load_corpus(input_path(cfg, "corpus"));
  const df::TimePartition partition = load_partition(cfg);
  const df::PartitionResult part = df::partition_by_time(corpus, partition);
  const double ratio = cfg.get_double("ratio", 0.7);
  const std::uint64_t seed = seed_of(cfg);
  const fs::path dir = out_dir(cfg);
  const std::string meta = meta_line("ingest", cfg);

  fmt::print("{:<10} {:>12} {:>8}\n", "interval", "years", "docs");
  for (std::size_t i = 0; i < part.buckets.size(); ++i) {
    const auto& r = partition.intervals[i];
    fmt::print("{:<10} {:>12} {:>8}\n", i, fmt::format("{}-{}", r.begin, r.end - 1), part.buckets[i].size());
  }
  fmt::print("{:<10} {:>12} {:>8}\n", "dropped", "", part.dropped.size());

  json summary = json::parse(meta);
  summary["n_docs"] = corpus.size();
  summary["dropped"] = part.dropped.size();
  for (const auto& [name, index] : {std::pair<std::string, std::size_t>{"source", partition.source_index},
                                    {"target", partition.target_index}}) {
    const auto& ids = part.buckets[index];
    if (ids.empty()) throw df::ValidationError("the " + name + " interval holds no documents");
    const df::Split split = df::split_train_test(ids, ratio, seed);
    df::write_corpus((dir / (name + "_train.jsonl")).string(), corpus.subset(split.train_ids).docs(), meta);
    df::write_corpus((dir / (name + "_test.jsonl")).string(), corpus.subset(split.test_ids).docs(), meta);
    summary[name] = {{"interval", index}, {"train", split.train_ids.size()}, {"test", split.test_ids.size()}};
    fmt::print("{}: {} train / {} test\n", name, split.train_ids.size(), split.test_ids.size());
  }
  write_text(dir / "ingest_summary.json", summary.dump(1) + "\n");
  return 0;
}

int cmd_build_lexicon(const df::KeyValueConfig& cfg) {
  std::vector<df::ConceptLexicon> parts;
  for (const auto& p : list_of(cfg, "lexicon.mesh")) parts.push_back(df::ingest_mesh_xml(p));
  const auto tabular = list_of(cfg, "lexicon.tabular");
  if (!tabular.empty()) {
    df::TabularOptions opt;
    opt.pt_column = cfg.get_string("lexicon.pt_column", "PT");
    opt.npt_column = cfg.get_string("lexicon.npt_column", "NPT");
    const std::string delim = cfg.get_string("lexicon.delimiter", ",");
    if (delim == "tab" || delim == "\\t") {
      opt.delimiter = '\t';
    } else if (delim.size() == 1) {
      opt.delimiter = delim[0];
    } else {
      throw df::ConfigError("lexicon.delimiter must be one character or 'tab'");
    }
    for (const auto& p : tabular) parts.push_back(df::ingest_tabular_thesaurus(p, opt));
  }
  for (const auto& p : list_of(cfg, "lexicon.cso")) parts.push_back(df::ingest_cso_triples(p));
  const bool strict = !cfg.get_bool("lexicon.lenient", false);
  for (const auto& p : list_of(cfg, "lexicon.llm")) parts.push_back(df::ingest_llm_lexicon(p, strict));
  if (parts.empty()) throw df::ConfigError("build-lexicon needs at least one input (--mesh, --tabular, --cso, --llm)");

  std::vector<const df::ConceptLexicon*> ptrs;
  for (const auto& l : parts) ptrs.push_back(&l);
  const df::ConceptLexicon merged = df::merge(ptrs);
  const std::string out = required(cfg, "out");
  df::save_lexicon(merged, out, meta_line("build-lexicon", cfg));
  std::size_t synonyms = 0;
  for (const auto& c : merged.concepts()) synonyms += c.synonyms.size();
  fmt::print("{} concepts, {} synonyms -> {}\n", merged.size(), synonyms, out);
  return 0;
}

int cmd_fit(const df::KeyValueConfig& cfg) {
  df::SourceStats stats;
  const auto emb = optional_input(cfg, "embeddings");
  const auto corpus = optional_input(cfg, "corpus");
  const auto lexicon = optional_input(cfg, "lexicon");
  if (!emb && !(corpus && lexicon)) {
    throw df::ConfigError("fit needs --embeddings and/or --corpus with --lexicon");
  }
  if (emb) {
    stats.feature.emplace(df::fit_feature_stats(df::read_embeddings(*emb),
                                                cfg.get_double("shrinkage", df::kDefaultShrinkage)));
    fmt::print("feature stats: d={} d_min={:.6g} d_max={:.6g}\n", stats.feature->dim(),
               stats.feature->d_min(), stats.feature->d_max());
  }
  if (corpus && lexicon) {
    const df::Corpus c = df::load_corpus(*corpus);
    const df::ConceptLexicon lex = df::load_lexicon(*lexicon);
    const df::ConceptMatcher matcher(lex);
    stats.concepts = df::fit_concept_stats(c.docs(), matcher);
    fmt::print("concept stats: N={} concepts seen={}\n", stats.concepts->n_docs, stats.concepts->freq.size());
  }
  stats.meta = meta_line("fit", cfg);
  df::write_stats(required(cfg, "out"), stats);
  return 0;
}

int cmd_encode(const df::KeyValueConfig& cfg) {
  const df::Corpus docs = df::load_corpus(input_path(cfg, "corpus"));
  std::optional<df::Corpus> source;
  if (auto p = optional_input(cfg, "source")) source = df::load_corpus(*p);
  const fs::path prefix = required(cfg, "out");
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  const fs::path work = prefix.string() + ".work";
  auto trainer = make_trainer(cfg, source ? &*source : nullptr, work);
  const df::EncodeResult enc = trainer->encode(docs.docs());
  df::write_embeddings(prefix.string() + ".dfemb", enc.embeddings);
  df::write_logits(prefix.string() + ".dflgt", enc.logits);
  json meta = json::parse(meta_line("encode", cfg));
  meta["model"] = {{"name", trainer->handle().model}, {"version", trainer->handle().version}};
  meta["labels"] = trainer->labels();
  write_text(prefix.string() + ".meta.json", meta.dump(1) + "\n");
  fmt::print("{} docs, d={}, L={} -> {}.dfemb/.dflgt\n", enc.embeddings.rows(), enc.embeddings.dim(),
             enc.logits.labels(), prefix.string());
  return 0;
}

int cmd_detect(const df::KeyValueConfig& cfg) {
  const df::ShiftConfig shift = shift_config(cfg);
  const df::LogitMatrix logits = df::read_logits(input_path(cfg, "logits"));
  const df::EmbeddingMatrix emb = df::read_embeddings(input_path(cfg, "embeddings"));
  const df::SourceStats stats = df::read_stats(input_path(cfg, "stats"));
  const df::Corpus corpus = df::load_corpus(input_path(cfg, "corpus"));
  const df::ConceptLexicon lex = df::load_lexicon(input_path(cfg, "lexicon"));
  if (!stats.feature || !stats.concepts) {
    throw df::ValidationError("detect needs both feature and concept statistics in the stats file");
  }
  const df::ConceptMatcher matcher(lex);

  // Row order of the logit file defines the document order.
  const auto& ids = logits.ids();
  std::vector<df::Document> docs;
  for (const auto& id : ids) docs.push_back(corpus.at(id));
  const df::EmbeddingMatrix aligned(emb.select(ids));
  const df::ShiftScores scores = df::assemble_scores(
      ids, df::uncertainty_scores(logits, shift), df::feature_scores(aligned, *stats.feature),
      df::ontology_scores(docs, matcher, *stats.concepts));
  const df::ShiftSet set = df::detect(scores, shift);
  const df::OverlapReport overlap = df::overlap_report(set, scores.size());

  const fs::path dir = out_dir(cfg);
  const std::string meta = meta_line("detect", cfg);
  write_text(dir / "scores.csv", with_meta_comment(meta, df::scores_to_csv(scores, set)));
  json sets = json::parse(meta);
  sets["n"] = scores.size();
  sets["D_U"] = set.uncertain;
  sets["D_F"] = set.feature;
  sets["D_O"] = set.ontology;
  sets["D_shift"] = set.shifted;
  write_text(dir / "shift_sets.json", sets.dump(1) + "\n");
  write_text(dir / "overlap.csv", with_meta_comment(meta, overlap.to_csv()));
  std::cout << overlap.to_table();
  fmt::print("|D_U|={} |D_F|={} |D_O|={} |D_shift|={} of {}\n", set.uncertain.size(), set.feature.size(),
             set.ontology.size(), set.shifted.size(), scores.size());
  return 0;
}

int cmd_retrieve(const df::KeyValueConfig& cfg) {
  const df::EmbeddingMatrix target = df::read_embeddings(input_path(cfg, "target_embeddings"));
  const df::EmbeddingMatrix source = df::read_embeddings(input_path(cfg, "source_embeddings"));
  std::vector<std::string> ids = target.ids();
  if (auto p = optional_input(cfg, "sets")) {
    const json sets = json::parse(df::read_binary_file(*p));
    if (!sets.contains("D_shift")) throw df::ParseError("shift set file lacks D_shift");
    ids = sets["D_shift"].get<std::vector<std::string>>();
  }
  const std::size_t k = count_of(cfg, "adapt.k", 3);
  if (k == 0) throw df::ConfigError("k must be at least 1");
  const auto results = df::retrieve_topk(ids, target, source, k);
  const std::string out = required(cfg, "out");
  write_text(out, df::retrievals_to_jsonl(results, meta_line("retrieve", cfg)));
  fmt::print("{} targets, k={} -> {}\n", results.size(), k, out);
  return 0;
}

int cmd_augment(const df::KeyValueConfig& cfg) {
  const auto retrievals = df::retrievals_from_jsonl(df::read_binary_file(input_path(cfg, "retrievals")));
  const df::Corpus source = df::load_corpus(input_path(cfg, "source"));
  const df::ConceptLexicon lex = df::load_lexicon(input_path(cfg, "lexicon"));
  const df::ConceptMatcher matcher(lex);
  const df::AugmentedBatch batch = df::augment_batch(retrievals, source, matcher, augment_config(cfg));
  const std::string out = required(cfg, "out");
  write_text(out, df::batch_to_jsonl(batch, meta_line("augment", cfg)));
  std::size_t variants = 0;
  for (const auto& s : batch.samples) variants += s.variant_index > 0;
  fmt::print("{} samples ({} variants) -> {}\n", batch.samples.size(), variants, out);
  return 0;
}

std::string label_sets_with_meta(const std::string& meta, const df::LabelSets& sets) {
  return meta + "\n" + df::label_sets_to_jsonl(sets);
}

int cmd_adapt(const df::KeyValueConfig& cfg) {
  const df::AdaptConfig config = adapt_config(cfg);
  const fs::path dir = out_dir(cfg);
  const RunData data(cfg, dir / "trainer");
  auto trainer = data.trainer();
  const std::string meta = meta_line("adapt", cfg);

  std::string log = meta + "\n";
  const auto sink = [&](const df::BatchRecord& r) {
    log += r.to_json() + "\n";
    // Flushed per batch so a failing trainer still leaves the log behind.
    write_text(dir / "adapt_log.jsonl", log);
  };
  write_text(dir / "adapt_log.jsonl", log);
  const df::AdaptResult r = df::run_adaptation(data.inputs(), config, *trainer, sink);

  write_text(dir / "predictions.jsonl", label_sets_with_meta(meta, r.predictions));
  json metrics = json::parse(meta);
  metrics["initial_version"] = r.initial.version;
  metrics["final_version"] = r.final.version;
  metrics["updates"] = r.updates;
  metrics["adapted"] = json::parse(r.adapted.to_json());
  if (r.baseline) {
    metrics["baseline"] = json::parse(r.baseline->to_json());
    write_text(dir / "baseline_predictions.jsonl", label_sets_with_meta(meta, *r.baseline_predictions));
  }
  if (const auto* syn = data.synthetic()) {
    const df::SignalRecall rec = df::drift_recall(r, syn->data(), syn->target());
    metrics["drift_recall"] = {{"planted", rec.planted}, {"in_D_shift", rec.in_shifted},
                               {"D_U", rec.in_uncertain}, {"D_F", rec.in_feature},
                               {"D_O", rec.in_ontology}, {"recall", rec.recall()}};
    fmt::print("planted drifted docs flagged: {}/{} ({:.3f})\n", rec.in_shifted, rec.planted, rec.recall());
  }
  write_text(dir / "metrics.json", metrics.dump(1) + "\n");

  std::size_t shifted = 0;
  for (const auto& b : r.batches) shifted += b.sets.shifted.size();
  fmt::print("{} batches, {} shifted docs, {} updates (model v{} -> v{})\n", r.batches.size(), shifted,
             r.updates, r.initial.version, r.final.version);
  if (r.baseline) std::cout << "unadapted\n" << r.baseline->to_table();
  std::cout << "adapted\n" << r.adapted.to_table();
  return 0;
}

int cmd_evaluate(const df::KeyValueConfig& cfg) {
  const df::LabelSets pred = df::label_sets_from_jsonl(df::read_binary_file(input_path(cfg, "pred")));
  const df::LabelSets gold = df::label_sets_from_jsonl(df::read_binary_file(input_path(cfg, "gold")));
  const df::MetricsReport report = df::evaluate(pred, gold, list_of(cfg, "labels"));
  std::cout << report.to_table();
  if (auto out = cfg.get("out"); out && !out->empty()) {
    json j = json::parse(meta_line("evaluate", cfg));
    j["metrics"] = json::parse(report.to_json());
    write_text(*out, j.dump(1) + "\n");
  }
  return 0;
}

int cmd_analyze(const df::KeyValueConfig& cfg) {
  auto [scores, set] = df::scores_from_csv(df::read_binary_file(input_path(cfg, "scores")));
  const df::Corpus corpus = df::load_corpus(input_path(cfg, "corpus"));
  std::map<std::string, int> years;
  for (const auto& s : scores) years[s.id] = corpus.at(s.id).year;
  const df::OverlapReport overlap = df::overlap_report(set, scores.size());
  const df::TrendReport trend = df::trend_report(scores, years);
  const fs::path dir = out_dir(cfg);
  const std::string meta = meta_line("analyze", cfg);
  write_text(dir / "overlap.csv", with_meta_comment(meta, overlap.to_csv()));
  write_text(dir / "overlap.txt", with_meta_comment(meta, overlap.to_table()));
  write_text(dir / "trend.csv", with_meta_comment(meta, trend.to_csv()));
  write_text(dir / "trend.txt", with_meta_comment(meta, trend.to_table()));
  std::cout << overlap.to_table() << "\n" << trend.to_table();
  return 0;
}

int cmd_sweep(const df::KeyValueConfig& cfg, const std::vector<std::string>& params) {
  if (params.empty()) throw df::ConfigError("sweep needs at least one --param (k=1..5 or rho=0.05,0.1)");
  const df::AdaptConfig base = adapt_config(cfg);
  const fs::path dir = out_dir(cfg);
  const RunData data(cfg, dir / "trainer");
  const std::string meta = meta_line("sweep", cfg);
  for (const auto& spec : params) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw df::ConfigError("--param expects name=values, got '" + spec + "'");
    const std::string name = spec.substr(0, eq);
    const auto values = df::parse_param_values(spec.substr(eq + 1));
    const auto points = df::run_sweep(data.inputs(), base, name, values, [&] { return data.trainer(); });
    const std::string table = df::sweep_table(points);
    write_text(dir / ("sweep_" + name + ".txt"), with_meta_comment(meta, table));
    write_text(dir / ("sweep_" + name + ".csv"), with_meta_comment(meta, df::sweep_csv(points)));
    std::cout << "Sensitivity on " << name << "\n" << table << "\n";
  }
  return 0;
}

int cmd_synth(const df::KeyValueConfig& cfg) {
  const df::SyntheticConfig s = synthetic_config(cfg).synthetic;
  const df::SyntheticDataset ds = df::generate_synthetic(s);
  const fs::path dir = out_dir(cfg);
  const std::string meta = meta_line("synth", cfg);
  df::write_corpus((dir / "corpus.jsonl").string(), ds.corpus.docs(), meta);
  write_text(dir / "lexicon_llm.json", ds.lexicon_json + "\n");
  std::string drifted;
  for (const auto& id : ds.drifted_ids) drifted += id + "\n";
  write_text(dir / "drifted_ids.txt", drifted);
  const auto& iv = ds.partition.intervals;
  write_text(dir / "partition.conf",
             fmt::format("# {}\nintervals = \"{}-{}, {}-{}\"\nsource = 0\ntarget = 1\n", meta, iv[0].begin,
                         iv[0].end - 1, iv[1].begin, iv[1].end - 1));
  fmt::print("{} docs ({} drifted) over {} labels -> {}\n", ds.corpus.size(), ds.drifted_ids.size(),
             ds.labels.size(), dir.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"driftforge: temporal shift detection and retrieval-augmented adaptation"};
  app.require_subcommand(1);
  app.footer(
      "Settings: every flag mirrors a config key (shown in brackets). --config reads a key/value\n"
      "file ('key = value', '[section]' prefixes keys with 'section.'); flags override it.\n"
      "DRIFTFORGE_THREADS caps worker threads. Exit status: 0 ok, 1 invalid input or usage, 2 I/O error.");
  Settings settings;
  std::vector<std::string> sweep_params;

  auto* ingest = app.add_subcommand("ingest", "load a corpus, partition it by year and split source/target");
  settings.config_option(ingest);
  settings.option(ingest, "--corpus", "corpus", "corpus JSONL (id, text, year, labels)");
  settings.option(ingest, "--partition", "partition", "partition file: intervals = \"2010-2014, 2018-2022\", source, target, strict");
  settings.option(ingest, "--ratio", "ratio", "train fraction of each split (default 0.7)");
  settings.option(ingest, "--seed", "seed", "split seed (default 7)");
  settings.flag(ingest, "--strict", "strict", "fail on documents outside every interval");
  settings.option(ingest, "--out-dir", "out_dir", "output directory (default .)");

  auto* build = app.add_subcommand("build-lexicon", "ingest thesauri and LLM lexicons into one concept lexicon");
  settings.config_option(build);
  settings.option(build, "--mesh", "lexicon.mesh", "MeSH descriptor XML files, comma separated");
  settings.option(build, "--tabular", "lexicon.tabular", "PT/NPT tables, comma separated");
  settings.option(build, "--pt-column", "lexicon.pt_column", "preferred-term column (default PT)");
  settings.option(build, "--npt-column", "lexicon.npt_column", "non-preferred-term column (default NPT)");
  settings.option(build, "--delimiter", "lexicon.delimiter", "table delimiter, one character or 'tab' (default ,)");
  settings.option(build, "--cso", "lexicon.cso", "CSO-style triple CSV files, comma separated");
  settings.option(build, "--llm", "lexicon.llm", "LLM lexicon JSON/JSONL files, comma separated");
  settings.flag(build, "--lenient", "lexicon.lenient", "accept extra keys in LLM lexicon output");
  settings.option(build, "--out", "out", "lexicon JSON to write");
  settings.option(build, "--seed", "seed", "seed recorded in the artifact (default 7)");

  auto* fit = app.add_subcommand("fit", "fit source statistics (embedding moments, concept frequencies)");
  settings.config_option(fit);
  settings.option(fit, "--embeddings", "embeddings", "source DFEMB1 embeddings");
  settings.option(fit, "--corpus", "corpus", "source corpus JSONL for concept frequencies");
  settings.option(fit, "--lexicon", "lexicon", "lexicon JSON from build-lexicon");
  settings.option(fit, "--shrinkage", "shrinkage", "covariance shrinkage toward scaled identity (default 0.1)");
  settings.option(fit, "--out", "out", "stats file to write");
  settings.option(fit, "--seed", "seed", "seed recorded in the artifact (default 7)");

  auto* encode = app.add_subcommand("encode", "encode documents with the trainer into DFEMB1/DFLGT1 files");
  settings.config_option(encode);
  settings.option(encode, "--corpus", "corpus", "documents to encode (JSONL)");
  settings.option(encode, "--source", "source", "labeled source corpus that fits the built-in stub model");
  settings.option(encode, "--trainer", "trainer.command", "shell command of an external trainer (overrides the stub)");
  settings.option(encode, "--stub-epochs", "stub.epochs", "stub source-training epochs (default 10)");
  settings.option(encode, "--embed-dim", "stub.embed_dim", "stub embedding dimension (default 256)");
  settings.option(encode, "--out", "out", "output prefix; writes PREFIX.dfemb, PREFIX.dflgt, PREFIX.meta.json");
  settings.option(encode, "--seed", "seed", "model seed (default 7)");

  auto* detect = app.add_subcommand("detect", "score documents and build the shift sets D_U, D_F, D_O");
  settings.config_option(detect);
  settings.option(detect, "--logits", "logits", "target DFLGT1 logits");
  settings.option(detect, "--embeddings", "embeddings", "target DFEMB1 embeddings");
  settings.option(detect, "--stats", "stats", "source stats file from fit");
  settings.option(detect, "--lexicon", "lexicon", "lexicon JSON");
  settings.option(detect, "--corpus", "corpus", "target corpus JSONL (texts for concept matching)");
  settings.option(detect, "--rho", "shift.rho", "top fraction flagged by F and O (default 0.1)");
  settings.option(detect, "--tau-p", "shift.tau_p", "uncertainty threshold on max probability (default 0.5)");
  settings.option(detect, "--tau-h", "shift.tau_h", "uncertainty threshold on mean entropy, nats (default 0.25)");
  settings.option(detect, "--out-dir", "out_dir", "output directory (default .)");
  settings.option(detect, "--seed", "seed", "seed recorded in the artifacts (default 7)");

  auto* retrieve = app.add_subcommand("retrieve", "top-k cosine neighbors among source embeddings");
  settings.config_option(retrieve);
  settings.option(retrieve, "--target-embeddings", "target_embeddings", "target DFEMB1 embeddings");
  settings.option(retrieve, "--source-embeddings", "source_embeddings", "source DFEMB1 embeddings");
  settings.option(retrieve, "--sets", "sets", "shift_sets.json from detect; retrieves for D_shift only");
  settings.option(retrieve, "--k", "adapt.k", "neighbors per target (default 3)");
  settings.option(retrieve, "--out", "out", "retrieval JSONL to write");
  settings.option(retrieve, "--seed", "seed", "seed recorded in the artifact (default 7)");

  auto* augment = app.add_subcommand("augment", "synonym-substituted variants of retrieved source documents");
  settings.config_option(augment);
  settings.option(augment, "--retrievals", "retrievals", "retrieval JSONL");
  settings.option(augment, "--source", "source", "source corpus JSONL");
  settings.option(augment, "--lexicon", "lexicon", "lexicon JSON");
  settings.option(augment, "--variants", "augment.variants", "variants per source document (default 1)");
  settings.option(augment, "--max-subs", "augment.max_subs", "substitutions per variant (default 3)");
  settings.option(augment, "--originals", "augment.include_originals", "include unmodified originals (default true)");
  settings.option(augment, "--dedupe", "augment.dedupe_sources", "augment each source document once (default false)");
  settings.option(augment, "--prefer-llm", "augment.prefer_llm", "prefer LLM-sourced synonyms (default false)");
  settings.option(augment, "--seed", "seed", "augmentation seed (default 7)");
  settings.option(augment, "--out", "out", "batch JSONL to write");

  auto* adapt = app.add_subcommand("adapt", "stream the target through detect, retrieve, augment and update");
  settings.config_option(adapt);
  settings.flag(adapt, "--synthetic", "synthetic", "use the in-repo synthetic drift corpus");
  settings.option(adapt, "--source", "source", "labeled source corpus JSONL");
  settings.option(adapt, "--target", "target", "target stream JSONL (labels used only for scoring)");
  settings.option(adapt, "--lexicon", "lexicon", "lexicon JSON");
  settings.option(adapt, "--stats", "stats", "source stats; fitted from the trainer when absent");
  settings.option(adapt, "--trainer", "trainer.command", "shell command of an external trainer (default: built-in stub)");
  settings.option(adapt, "--batch-size", "adapt.batch_size", "target batch size (default 64)");
  settings.option(adapt, "--k", "adapt.k", "neighbors per shifted document (default 3)");
  settings.option(adapt, "--rho", "shift.rho", "top fraction flagged by F and O (default 0.1)");
  settings.option(adapt, "--tau-p", "shift.tau_p", "uncertainty threshold on max probability (default 0.5)");
  settings.option(adapt, "--tau-h", "shift.tau_h", "uncertainty threshold on mean entropy (default 0.25)");
  settings.option(adapt, "--variants", "augment.variants", "variants per source document (default 1)");
  settings.option(adapt, "--max-subs", "augment.max_subs", "substitutions per variant (default 3)");
  settings.flag(adapt, "--frozen", "stub.frozen", "stub accepts updates without changing weights");
  settings.option(adapt, "--seed", "seed", "run seed (default 7)");
  settings.option(adapt, "--out-dir", "out_dir", "output directory (default .)");

  auto* evaluate = app.add_subcommand("evaluate", "sample, micro and macro F1 of predicted label sets");
  settings.config_option(evaluate);
  settings.option(evaluate, "--pred", "pred", "predicted label sets JSONL (id, labels)");
  settings.option(evaluate, "--gold", "gold", "gold label sets JSONL (a corpus file works)");
  settings.option(evaluate, "--labels", "labels", "label vocabulary for macro F1, comma separated");
  settings.option(evaluate, "--out", "out", "metrics JSON to write");
  settings.option(evaluate, "--seed", "seed", "seed recorded in the artifact (default 7)");

  auto* analyze = app.add_subcommand("analyze", "detector overlap and year-wise score trends");
  settings.config_option(analyze);
  settings.option(analyze, "--scores", "scores", "scores.csv from detect");
  settings.option(analyze, "--corpus", "corpus", "corpus JSONL with the documents' years");
  settings.option(analyze, "--out-dir", "out_dir", "output directory (default .)");
  settings.option(analyze, "--seed", "seed", "seed recorded in the artifacts (default 7)");

  auto* sweep = app.add_subcommand("sweep", "vary k or rho with the other fixed and tabulate the results");
  settings.config_option(sweep);
  sweep->add_option("--param", sweep_params, "name=values, e.g. k=1..5 or rho=0.05,0.1,0.2,0.3 (repeatable)");
  settings.flag(sweep, "--synthetic", "synthetic", "use the in-repo synthetic drift corpus");
  settings.option(sweep, "--source", "source", "labeled source corpus JSONL");
  settings.option(sweep, "--target", "target", "target stream JSONL");
  settings.option(sweep, "--lexicon", "lexicon", "lexicon JSON");
  settings.option(sweep, "--stats", "stats", "source stats file");
  settings.option(sweep, "--trainer", "trainer.command", "shell command of an external trainer");
  settings.option(sweep, "--batch-size", "adapt.batch_size", "target batch size (default 64)");
  settings.option(sweep, "--k", "adapt.k", "k while rho varies (default 3)");
  settings.option(sweep, "--rho", "shift.rho", "rho while k varies (default 0.1)");
  settings.option(sweep, "--seed", "seed", "run seed (default 7)");
  settings.option(sweep, "--out-dir", "out_dir", "output directory (default .)");

  auto* synth = app.add_subcommand("synth", "write the synthetic drift corpus, its lexicon and partition");
  settings.config_option(synth);
  settings.option(synth, "--docs-per-period", "synthetic.docs_per_period", "documents per period (default 3000)");
  settings.option(synth, "--drift-fraction", "synthetic.drift_fraction", "share of each label's terms that drift (default 0.3)");
  settings.option(synth, "--seed", "seed", "generator seed (default 7)");
  settings.option(synth, "--out-dir", "out_dir", "output directory (default .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "driftforge: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    const df::KeyValueConfig cfg = settings.resolve();
    if (ingest->parsed()) return cmd_ingest(cfg);
    if (build->parsed()) return cmd_build_lexicon(cfg);
    if (fit->parsed()) return cmd_fit(cfg);
    if (encode->parsed()) return cmd_encode(cfg);
    if (detect->parsed()) return cmd_detect(cfg);
    if (retrieve->parsed()) return cmd_retrieve(cfg);
    if (augment->parsed()) return cmd_augment(cfg);
    if (adapt->parsed()) return cmd_adapt(cfg);
    if (evaluate->parsed()) return cmd_evaluate(cfg);
    if (analyze->parsed()) return cmd_analyze(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg, sweep_params);
    if (synth->parsed()) return cmd_synth(cfg);
  } catch (const df::IoError& e) {
    std::cerr << "driftforge: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "driftforge: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "driftforge: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
