#include <gtest/gtest.h>

#include <algorithm>
#include <memory>

#include "driftforge/adapt.h"
#include "driftforge/error.h"
#include "driftforge/experiment.h"

namespace df = driftforge;

namespace {

// Smaller than the defaults but big enough for the update gain to hold on
// every seed tried (1 to 5 and 7); at a few hundred docs it is noise.
df::SyntheticExperimentConfig small_config() {
  df::SyntheticExperimentConfig c;
  c.synthetic.docs_per_period = 2000;
  c.stub.hash_dim = 4096;
  c.stub.embed_dim = 128;
  return c;
}

const df::SyntheticSetup& setup() {
  static const auto* s = new df::SyntheticSetup(small_config());
  return *s;
}

// Forwards to a stub but reports every logit as -0.5, so every document is
// flagged as uncertain.
class AlwaysUncertain : public df::Trainer {
 public:
  explicit AlwaysUncertain(std::unique_ptr<df::Trainer> inner, int fail_on_update = -1)
      : inner_(std::move(inner)), fail_on_update_(fail_on_update) {}
  const std::vector<std::string>& labels() const override { return inner_->labels(); }
  df::ModelHandle handle() const override { return inner_->handle(); }
  df::EncodeResult encode(const std::vector<df::Document>& docs) override {
    auto r = inner_->encode(docs);
    std::vector<float> z(r.logits.values().size(), -0.5f);
    return {r.embeddings, df::LogitMatrix(r.logits.ids(), r.logits.labels(), z)};
  }
  df::ModelHandle update(const df::AugmentedBatch& b) override {
    if (++updates_ == fail_on_update_) throw df::TrainerError("update refused");
    return inner_->update(b);
  }
  df::IdMatrix predict(const std::vector<df::Document>& docs) override {
    return inner_->predict(docs);
  }

 private:
  std::unique_ptr<df::Trainer> inner_;
  int fail_on_update_;
  int updates_ = 0;
};

bool same_metrics(const df::MetricsReport& a, const df::MetricsReport& b) {
  return a.sample_precision == b.sample_precision && a.sample_recall == b.sample_recall &&
         a.sample_f1 == b.sample_f1 && a.micro_f1 == b.micro_f1 && a.macro_f1 == b.macro_f1;
}

}  // namespace

TEST(Adapt, FrozenTrainerReproducesBaseline) {
  const auto out = df::run_synthetic_experiment(setup(), small_config().adapt, true);
  ASSERT_TRUE(out.result.baseline);
  EXPECT_GT(out.result.updates, 0u);
  EXPECT_EQ(out.result.predictions, *out.result.baseline_predictions);
  EXPECT_TRUE(same_metrics(out.result.adapted, *out.result.baseline));
}

TEST(Adapt, UpdatesImproveOnPlantedDrift) {
  const auto out = df::run_synthetic_experiment(setup(), small_config().adapt);
  EXPECT_GT(out.result.adapted.micro_f1, out.result.baseline->micro_f1);
  EXPECT_GT(out.recall.planted, 0u);
  EXPECT_EQ(out.result.final.version, out.result.updates);
}

TEST(Adapt, LogReplayReproducesEveryBatch) {
  const auto cfg = small_config().adapt;
  const auto out = df::run_synthetic_experiment(setup(), cfg);
  std::size_t replayed = 0;
  for (const auto& rec : out.result.batches) {
    const auto back = df::BatchRecord::from_json(rec.to_json());
    EXPECT_EQ(back.to_json(), rec.to_json());
    if (!back.updated) continue;
    const auto batch = df::replay_batch(back, setup().source(), setup().matcher(), cfg.augment);
    EXPECT_EQ(df::digest_hex(df::batch_to_jsonl(batch)), rec.batch_digest);
    EXPECT_EQ(batch.samples.size(), rec.samples_sent);
    ++replayed;
  }
  EXPECT_EQ(replayed, out.result.updates);
  // a second run is identical
  const auto again = df::run_synthetic_experiment(setup(), cfg);
  ASSERT_EQ(again.result.batches.size(), out.result.batches.size());
  for (std::size_t i = 0; i < again.result.batches.size(); ++i) {
    EXPECT_EQ(again.result.batches[i].to_json(), out.result.batches[i].to_json());
  }
}

TEST(Adapt, EveryBatchUpdatesWhenAllUncertain) {
  AlwaysUncertain t(setup().make_trainer());
  auto cfg = small_config().adapt;
  cfg.evaluate_baseline = false;
  const auto r = df::run_adaptation(setup().inputs(), cfg, t);
  const std::size_t n = setup().target().size();
  const std::size_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
  ASSERT_EQ(r.batches.size(), batches);
  EXPECT_EQ(r.updates, batches);
  EXPECT_EQ(r.final.version, batches);
  for (const auto& b : r.batches) {
    EXPECT_EQ(b.sets.uncertain.size(), b.doc_ids.size());
    EXPECT_EQ(b.version_after, b.version_before + 1);
  }
  EXPECT_FALSE(r.baseline);
}

TEST(Adapt, EmptyStreamMakesNoUpdates) {
  auto trainer = setup().make_trainer();
  auto in = setup().inputs();
  in.target.clear();
  const auto r = df::run_adaptation(in, small_config().adapt, *trainer);
  EXPECT_EQ(r.updates, 0u);
  EXPECT_TRUE(r.batches.empty());
  EXPECT_EQ(r.final.version, 0u);
  EXPECT_EQ(r.adapted.n_docs, 0u);
}

TEST(Adapt, SinkSeesRecordsBeforeTrainerFailure) {
  AlwaysUncertain t(setup().make_trainer(), 3);
  std::vector<std::size_t> seen;
  EXPECT_THROW(df::run_adaptation(setup().inputs(), small_config().adapt, t,
                                  [&](const df::BatchRecord& r) { seen.push_back(r.index); }),
               df::TrainerError);
  EXPECT_EQ(seen, (std::vector<std::size_t>{0, 1}));
}

TEST(Adapt, ConfigAndInputValidation) {
  auto trainer = setup().make_trainer();
  auto cfg = small_config().adapt;
  cfg.batch_size = 0;
  EXPECT_THROW(df::run_adaptation(setup().inputs(), cfg, *trainer), df::ConfigError);
  cfg = small_config().adapt;
  cfg.k = 0;
  EXPECT_THROW(cfg.validate(), df::ConfigError);
  auto in = setup().inputs();
  in.matcher = nullptr;
  EXPECT_THROW(df::run_adaptation(in, small_config().adapt, *trainer), df::ConfigError);
}

TEST(DetectPerBatch, UnionOfChunks) {
  df::ShiftScores s(25);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i].id = "d" + std::to_string(100 + i);
    s[i].feature = static_cast<double>((i * 7) % 25);
    s[i].uncertain = i == 3;
  }
  const df::ShiftConfig cfg;
  const auto whole = df::detect(s, cfg);
  EXPECT_EQ(df::detect_per_batch(s, 100, cfg).shifted, whole.shifted);
  // batches of 10, 10, 5: one top-F doc each
  const auto per = df::detect_per_batch(s, 10, cfg);
  EXPECT_EQ(per.feature.size(), 3u);
  EXPECT_EQ(per.uncertain, std::vector<std::string>{"d103"});
  EXPECT_THROW(df::detect_per_batch(s, 0, cfg), df::ConfigError);
}

TEST(Sweep, RhoGrowsShiftSetAndTableLists) {
  const auto inputs = setup().inputs();
  const auto points = df::run_sweep(inputs, small_config().adapt, "rho", {0.05, 0.1, 0.2, 0.3},
                                    [] { return std::unique_ptr<df::Trainer>(setup().make_trainer()); });
  ASSERT_EQ(points.size(), 4u);
  for (std::size_t i = 1; i < points.size(); ++i) {
    EXPECT_GE(points[i].shifted_source_model, points[i - 1].shifted_source_model);
  }
  const auto table = df::sweep_table(points);
  EXPECT_NE(table.find("rho=0.05"), std::string::npos);
  EXPECT_NE(table.find("mi-F1"), std::string::npos);
  const auto csv = df::sweep_csv(points);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_THROW(df::run_sweep(inputs, small_config().adapt, "tau", {1}, {}), df::ConfigError);
  EXPECT_THROW(df::run_sweep(inputs, small_config().adapt, "k", {1.5},
                             [] { return std::unique_ptr<df::Trainer>(setup().make_trainer()); }),
               df::ConfigError);
}

TEST(Sweep, ParamValues) {
  EXPECT_EQ(df::parse_param_values("1..5"), (std::vector<double>{1, 2, 3, 4, 5}));
  EXPECT_EQ(df::parse_param_values("0.05, 0.1,0.2"), (std::vector<double>{0.05, 0.1, 0.2}));
  EXPECT_EQ(df::parse_param_values("3"), std::vector<double>{3});
  EXPECT_THROW(df::parse_param_values("5..1"), df::ConfigError);
  EXPECT_THROW(df::parse_param_values("a,b"), df::ConfigError);
  EXPECT_THROW(df::parse_param_values("0.1,"), df::ConfigError);
}

TEST(BatchRecord, JsonRejectsMissingFields) {
  EXPECT_THROW(df::BatchRecord::from_json("{\"batch\":1}"), df::ParseError);
  EXPECT_THROW(df::BatchRecord::from_json("nope"), df::ParseError);
}
