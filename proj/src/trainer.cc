#include "driftforge/trainer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>

#include "driftforge/error.h"
#include "driftforge/random.h"
#include "driftforge/text.h"
#include "json.hpp"

namespace driftforge {

using nlohmann::json;

namespace {

double sigmoid(double z) {
  z = std::clamp(z, -30.0, 30.0);
  return 1.0 / (1.0 + std::exp(-z));
}

}  // namespace

std::vector<std::vector<std::string>> threshold_predictions(
    const IdMatrix& probs, const std::vector<std::string>& labels, double threshold) {
  if (probs.rows() > 0 && probs.cols() != labels.size()) {
    throw ValidationError("probability columns do not match the label vocabulary");
  }
  std::vector<std::vector<std::string>> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    for (std::size_t l = 0; l < labels.size(); ++l) {
      if (row[l] >= threshold) out[i].push_back(labels[l]);
    }
  }
  return out;
}

// ------------------------------------------------------------------ stub

StubTrainer::StubTrainer(std::vector<std::string> labels, StubConfig config)
    : labels_(std::move(labels)), config_(config) {
  if (labels_.empty()) throw ConfigError("stub trainer needs at least one label");
  if (config_.hash_dim == 0 || config_.embed_dim == 0) {
    throw ConfigError("stub dimensions must be positive");
  }
  Rng rng(mix64(config_.seed));
  projection_.resize(config_.hash_dim * config_.embed_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(config_.embed_dim));
  for (float& v : projection_) v = static_cast<float>(rng.normal() * scale);
  idf_.assign(config_.hash_dim, 1.0f);
  weights_.assign(labels_.size() * config_.hash_dim, 0.0);
  bias_.assign(labels_.size(), 0.0);
}

StubTrainer::Sparse StubTrainer::features(const std::string& doc_text) const {
  std::map<std::uint32_t, int> counts;
  for (const auto& u : text::segment(doc_text)) {
    if (u.kind != text::UnitKind::kWord) continue;
    counts[static_cast<std::uint32_t>(fnv1a(u.norm) % config_.hash_dim)]++;
  }
  Sparse x;
  double norm = 0.0;
  for (const auto& [bucket, c] : counts) {
    const double v = (1.0 + std::log(static_cast<double>(c))) * idf_[bucket];
    x.index.push_back(bucket);
    x.value.push_back(static_cast<float>(v));
    norm += v * v;
  }
  if (norm > 0.0) {
    const double inv = 1.0 / std::sqrt(norm);
    for (float& v : x.value) v = static_cast<float>(v * inv);
  }
  return x;
}

void StubTrainer::logits(const Sparse& x, std::vector<double>& out) const {
  out.assign(labels_.size(), 0.0);
  for (std::size_t l = 0; l < labels_.size(); ++l) {
    const double* w = &weights_[l * config_.hash_dim];
    double z = bias_[l];
    for (std::size_t k = 0; k < x.index.size(); ++k) z += w[x.index[k]] * x.value[k];
    out[l] = z;
  }
}

void StubTrainer::train(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& samples,
    int epochs, std::uint64_t seed) {
  std::map<std::string, std::size_t> label_pos;
  for (std::size_t l = 0; l < labels_.size(); ++l) label_pos.emplace(labels_[l], l);
  std::vector<Sparse> xs;
  std::vector<std::vector<double>> ys;
  xs.reserve(samples.size());
  for (const auto& [sample_text, sample_labels] : samples) {
    xs.push_back(features(sample_text));
    std::vector<double> y(labels_.size(), 0.0);
    for (const auto& l : sample_labels) {
      auto it = label_pos.find(l);
      if (it == label_pos.end()) throw ValidationError("unknown label '" + l + "' in update");
      y[it->second] = 1.0;
    }
    ys.push_back(std::move(y));
  }
  std::vector<std::size_t> order(xs.size());
  std::vector<double> z;
  const double lr = config_.learning_rate;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, "epoch", static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    for (std::size_t i : order) {
      const Sparse& x = xs[i];
      logits(x, z);
      for (std::size_t l = 0; l < labels_.size(); ++l) {
        const double g = sigmoid(z[l]) - ys[i][l];
        double* w = &weights_[l * config_.hash_dim];
        for (std::size_t k = 0; k < x.index.size(); ++k) {
          double& wk = w[x.index[k]];
          wk -= lr * (g * x.value[k] + config_.l2 * wk);
        }
        bias_[l] -= lr * g;
      }
    }
  }
}

void StubTrainer::fit_source(const std::vector<Document>& docs, int epochs) {
  if (docs.empty()) throw ValidationError("no source documents to fit the stub model");
  std::vector<std::size_t> df(config_.hash_dim, 0);
  for (const auto& d : docs) {
    std::vector<std::uint32_t> seen;
    for (const auto& u : text::segment(d.text)) {
      if (u.kind == text::UnitKind::kWord) {
        seen.push_back(static_cast<std::uint32_t>(fnv1a(u.norm) % config_.hash_dim));
      }
    }
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (auto b : seen) ++df[b];
  }
  const double n = static_cast<double>(docs.size());
  for (std::size_t b = 0; b < config_.hash_dim; ++b) {
    idf_[b] = static_cast<float>(std::log((1.0 + n) / (1.0 + static_cast<double>(df[b]))) + 1.0);
  }
  std::vector<std::pair<std::string, std::vector<std::string>>> samples;
  samples.reserve(docs.size());
  for (const auto& d : docs) samples.emplace_back(d.text, d.labels);
  train(samples, epochs, derive_seed(config_.seed, "source"));
  version_ = 0;
}

EncodeResult StubTrainer::encode(const std::vector<Document>& docs) {
  const std::size_t e = config_.embed_dim;
  std::vector<std::string> ids;
  std::vector<float> emb(docs.size() * e, 0.0f);
  std::vector<float> lg(docs.size() * labels_.size(), 0.0f);
  std::vector<double> z;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    ids.push_back(docs[i].id);
    const Sparse x = features(docs[i].text);
    std::vector<double> acc(e, 0.0);
    for (std::size_t k = 0; k < x.index.size(); ++k) {
      const float* r = &projection_[static_cast<std::size_t>(x.index[k]) * e];
      for (std::size_t j = 0; j < e; ++j) acc[j] += static_cast<double>(r[j]) * x.value[k];
    }
    for (std::size_t j = 0; j < e; ++j) emb[i * e + j] = static_cast<float>(acc[j]);
    logits(x, z);
    for (std::size_t l = 0; l < labels_.size(); ++l) {
      lg[i * labels_.size() + l] = static_cast<float>(z[l]);
    }
  }
  return {EmbeddingMatrix(ids, e, std::move(emb)),
          LogitMatrix(ids, labels_.size(), std::move(lg))};
}

ModelHandle StubTrainer::update(const AugmentedBatch& batch) {
  if (!config_.frozen && !batch.samples.empty()) {
    std::vector<std::pair<std::string, std::vector<std::string>>> samples;
    samples.reserve(batch.samples.size());
    for (const auto& s : batch.samples) samples.emplace_back(s.text, s.labels);
    train(samples, config_.epochs_per_update, derive_seed(config_.seed, "update", version_));
  }
  ++version_;
  return handle();
}

IdMatrix StubTrainer::predict(const std::vector<Document>& docs) {
  std::vector<std::string> ids;
  std::vector<float> probs(docs.size() * labels_.size());
  std::vector<double> z;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    ids.push_back(docs[i].id);
    logits(features(docs[i].text), z);
    for (std::size_t l = 0; l < labels_.size(); ++l) {
      probs[i * labels_.size() + l] = static_cast<float>(sigmoid(z[l]));
    }
  }
  return IdMatrix(std::move(ids), labels_.size(), std::move(probs));
}

// ------------------------------------------------------------------ server

namespace {

std::vector<Document> docs_from_request(const json& req) {
  if (!req.contains("docs") || !req["docs"].is_array()) {
    throw ParseError("request needs a 'docs' array");
  }
  std::vector<Document> docs;
  for (const auto& d : req["docs"]) {
    Document doc;
    doc.id = d.at("id").get<std::string>();
    doc.text = d.at("text").get<std::string>();
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace

void serve(Trainer& trainer, std::istream& in, std::ostream& out,
           const std::string& work_dir) {
  std::string line;
  std::uint64_t counter = 0;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    json reply;
    bool stop = false;
    try {
      const json req = json::parse(line);
      const std::string op = req.at("op").get<std::string>();
      if (op == "info") {
        const ModelHandle h = trainer.handle();
        reply = {{"labels", trainer.labels()}, {"version", h.version}, {"model", h.model}};
      } else if (op == "encode") {
        const auto docs = docs_from_request(req);
        const std::string dir = req.value("out_dir", work_dir);
        const EncodeResult enc = trainer.encode(docs);
        ++counter;
        const auto base = std::filesystem::path(dir) / ("encode_" + std::to_string(counter));
        const std::string emb_path = base.string() + ".dfemb";
        const std::string lgt_path = base.string() + ".dflgt";
        write_embeddings(emb_path, enc.embeddings);
        write_logits(lgt_path, enc.logits);
        reply = {{"embeddings", emb_path}, {"logits", lgt_path}};
      } else if (op == "update") {
        const auto path = req.at("batch_path").get<std::string>();
        const AugmentedBatch batch = batch_from_jsonl(read_binary_file(path));
        reply = {{"version", trainer.update(batch).version}};
      } else if (op == "predict") {
        const auto docs = docs_from_request(req);
        const IdMatrix probs = trainer.predict(docs);
        json preds = json::array();
        for (std::size_t i = 0; i < probs.rows(); ++i) {
          const auto r = probs.row(i);
          preds.push_back({{"id", probs.ids()[i]}, {"probs", std::vector<float>(r.begin(), r.end())}});
        }
        reply = {{"predictions", preds}};
      } else if (op == "shutdown") {
        reply = {{"ok", true}};
        stop = true;
      } else {
        reply = {{"error", "unknown op '" + op + "'"}};
      }
    } catch (const std::exception& e) {
      reply = {{"error", e.what()}};
    }
    out << reply.dump() << '\n';
    out.flush();
    if (stop) break;
  }
}

}  // namespace driftforge
