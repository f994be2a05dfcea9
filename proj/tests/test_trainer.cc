#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "driftforge/error.h"
#include "driftforge/random.h"
#include "driftforge/synthetic.h"
#include "driftforge/trainer.h"
#include "json.hpp"

namespace df = driftforge;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("df_trainer_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

df::StubConfig small_stub() {
  df::StubConfig c;
  c.hash_dim = 1024;
  c.embed_dim = 16;
  return c;
}

df::SyntheticDataset small_data() {
  df::SyntheticConfig c;
  c.labels = 4;
  c.terms_per_label = 4;
  c.docs_per_period = 60;
  return df::generate_synthetic(c);
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

std::string server_command(const fs::path& corpus, const fs::path& work, int epochs,
                           const df::StubConfig& c) {
  return quote(DRIFTFORGE_STUB_SERVER) + " --source " + quote(corpus.string()) + " --work-dir " +
         quote(work.string()) + " --epochs " + std::to_string(epochs) + " --hash-dim " +
         std::to_string(c.hash_dim) + " --embed-dim " + std::to_string(c.embed_dim) +
         (c.frozen ? " --frozen" : "");
}

df::AugmentedBatch batch_of(const std::vector<df::Document>& docs) {
  df::AugmentedBatch b;
  for (const auto& d : docs) b.samples.push_back({d.id, 0, d.text, d.labels, {}});
  return b;
}

}  // namespace

TEST(Threshold, InclusiveAtCutoff) {
  const df::IdMatrix p({"a", "b"}, 3, {0.5f, 0.49f, 0.9f, 0.1f, 0.2f, 0.3f});
  const auto s = df::threshold_predictions(p, {"x", "y", "z"});
  EXPECT_EQ(s[0], (std::vector<std::string>{"x", "z"}));
  EXPECT_TRUE(s[1].empty());
}

TEST(Stub, DeterministicAndFrozen) {
  const auto data = small_data();
  const auto& docs = data.corpus.docs();
  df::StubTrainer a(data.labels, small_stub()), b(data.labels, small_stub());
  a.fit_source(docs, 3);
  b.fit_source(docs, 3);
  EXPECT_EQ(a.encode(docs).embeddings, b.encode(docs).embeddings);
  EXPECT_EQ(a.predict(docs), b.predict(docs));

  auto cfg = small_stub();
  cfg.frozen = true;
  df::StubTrainer frozen(data.labels, cfg);
  frozen.fit_source(docs, 3);
  const auto before = frozen.predict(docs);
  const std::vector<df::Document> few(docs.begin(), docs.begin() + 10);
  EXPECT_EQ(frozen.update(batch_of(few)).version, 1u);
  EXPECT_EQ(frozen.predict(docs), before);
  EXPECT_EQ(a.update(batch_of(few)).version, 1u);
  EXPECT_NE(a.predict(docs), b.predict(docs));
  const auto enc = a.encode(few);
  EXPECT_EQ(enc.embeddings.dim(), 16u);
  EXPECT_EQ(enc.logits.labels(), data.labels.size());
  EXPECT_EQ(enc.logits.ids(), enc.embeddings.ids());
}

TEST(Serve, ProtocolOverStreams) {
  const auto data = small_data();
  const auto dir = scratch("serve");
  df::StubTrainer t(data.labels, small_stub());
  t.fit_source(data.corpus.docs(), 2);
  df::write_binary_file((dir / "b.jsonl").string(),
                        df::batch_to_jsonl(batch_of({data.corpus.docs()[0]})));
  const auto& d0 = data.corpus.docs()[0];
  std::istringstream in(
      "{\"op\":\"info\"}\n"
      "\n"
      "not json\n" +
      json{{"op", "encode"}, {"docs", json::array({json{{"id", d0.id}, {"text", d0.text}}})}}.dump() + "\n"
      "{\"op\":\"fly\"}\n"
      "{\"op\":\"update\",\"batch_path\":\"" + (dir / "b.jsonl").string() + "\"}\n"
      "{\"op\":\"update\",\"batch_path\":\"" + (dir / "missing.jsonl").string() + "\"}\n"
      "{\"op\":\"predict\",\"docs\":[{\"id\":\"q\",\"text\":\"hello\"}]}\n"
      "{\"op\":\"shutdown\"}\n"
      "{\"op\":\"info\"}\n");
  std::ostringstream out;
  df::serve(t, in, out, dir.string());
  std::istringstream lines(out.str());
  std::vector<json> r;
  for (std::string l; std::getline(lines, l);) r.push_back(json::parse(l));
  ASSERT_EQ(r.size(), 8u);  // nothing after shutdown
  EXPECT_EQ(r[0]["labels"].get<std::vector<std::string>>(), data.labels);
  EXPECT_EQ(r[0]["version"], 0);
  EXPECT_TRUE(r[1].contains("error"));
  const auto emb = df::read_embeddings(r[2]["embeddings"].get<std::string>());
  EXPECT_EQ(emb.ids(), std::vector<std::string>{d0.id});
  EXPECT_EQ(df::read_logits(r[2]["logits"].get<std::string>()).labels(), data.labels.size());
  EXPECT_TRUE(r[3].contains("error"));
  EXPECT_EQ(r[4]["version"], 1);
  EXPECT_TRUE(r[5].contains("error"));
  EXPECT_EQ(r[6]["predictions"][0]["probs"].size(), data.labels.size());
  EXPECT_EQ(r[7]["ok"], true);
}

TEST(ProcessTrainer, BitExactAgainstInProcessStub) {
  const auto data = small_data();
  const auto dir = scratch("exact");
  const auto corpus = dir / "source.jsonl";
  df::write_corpus(corpus.string(), data.corpus.docs());
  const auto& docs = data.corpus.docs();
  const std::vector<std::string> labels = df::load_corpus(corpus.string()).labels();

  df::Rng rng(13);
  for (int seq = 0; seq < 100; ++seq) {
    df::StubTrainer local(labels, small_stub());
    local.fit_source(docs, 2);
    df::ProcessTrainer remote(server_command(corpus, dir / "work", 2, small_stub()),
                              (dir / "client").string());
    ASSERT_EQ(remote.labels(), local.labels());
    ASSERT_EQ(remote.handle().version, 0u);
    const int ops = 1 + static_cast<int>(rng.uniform_index(5));
    for (int o = 0; o < ops; ++o) {
      std::vector<df::Document> pick;
      const auto n = 1 + rng.uniform_index(8);
      for (std::uint64_t i = 0; i < n; ++i) pick.push_back(docs[rng.uniform_index(docs.size())]);
      // distinct ids inside a request
      std::sort(pick.begin(), pick.end(), [](auto& a, auto& b) { return a.id < b.id; });
      pick.erase(std::unique(pick.begin(), pick.end(), [](auto& a, auto& b) { return a.id == b.id; }),
                 pick.end());
      switch (rng.uniform_index(3)) {
        case 0: {
          const auto a = local.encode(pick);
          const auto b = remote.encode(pick);
          ASSERT_EQ(a.embeddings, b.embeddings) << seq;
          ASSERT_EQ(a.logits, b.logits) << seq;
          break;
        }
        case 1:
          ASSERT_EQ(local.update(batch_of(pick)).version, remote.update(batch_of(pick)).version);
          break;
        default:
          ASSERT_EQ(local.predict(pick), remote.predict(pick)) << seq;
      }
    }
  }
}

TEST(ProcessTrainer, ErrorsBecomeTrainerError) {
  const auto dir = scratch("errors");
  EXPECT_THROW(df::ProcessTrainer("true", dir.string()), df::TrainerError);
  EXPECT_THROW(df::ProcessTrainer("echo '{\"error\":\"boom\"}'", dir.string()), df::TrainerError);
  EXPECT_THROW(df::ProcessTrainer("echo 'garbage'", dir.string()), df::TrainerError);
  // Answers info, then dies.
  df::ProcessTrainer t("read l; echo '{\"labels\":[\"a\"],\"version\":0}'", dir.string());
  EXPECT_EQ(t.labels(), std::vector<std::string>{"a"});
  EXPECT_THROW(t.predict({{"x", "text", 2000, {}}}), df::TrainerError);
  // Server with a missing source corpus exits at startup.
  EXPECT_THROW(df::ProcessTrainer(quote(DRIFTFORGE_STUB_SERVER) + " --source /nonexistent.jsonl 2>/dev/null",
                                  dir.string()),
               df::TrainerError);
}
