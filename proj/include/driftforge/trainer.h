#ifndef DRIFTFORGE_TRAINER_H_
#define DRIFTFORGE_TRAINER_H_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "driftforge/augment.h"
#include "driftforge/corpus.h"
#include "driftforge/matrix_io.h"

namespace driftforge {

// Current model state held by the trainer. `version` 0 is the source model.
struct ModelHandle {
  std::string model;
  std::uint64_t version = 0;
};

struct EncodeResult {
  EmbeddingMatrix embeddings;
  LogitMatrix logits;
};

// The classifier being adapted. Implementations: StubTrainer (in-process)
// and ProcessTrainer (line-delimited JSON over a child's stdio).
class Trainer {
 public:
  virtual ~Trainer() = default;

  virtual const std::vector<std::string>& labels() const = 0;
  virtual ModelHandle handle() const = 0;

  virtual EncodeResult encode(const std::vector<Document>& docs) = 0;
  // One update with every sample of the batch; returns the new handle.
  virtual ModelHandle update(const AugmentedBatch& batch) = 0;
  // Sigmoid probabilities, columns in label order.
  virtual IdMatrix predict(const std::vector<Document>& docs) = 0;
};

// Thresholds probabilities at `threshold` (inclusive).
std::vector<std::vector<std::string>> threshold_predictions(
    const IdMatrix& probs, const std::vector<std::string>& labels,
    double threshold = 0.5);

struct StubConfig {
  std::size_t hash_dim = 1 << 14;
  std::size_t embed_dim = 256;
  double learning_rate = 0.5;
  double l2 = 1e-5;
  int epochs_per_update = 3;
  std::uint64_t seed = 7;
  // Updates are accepted (versions advance) but weights never change.
  bool frozen = false;
};

// Deterministic stand-in for a transformer classifier: hashed tf-idf unigram
// features, a fixed Gaussian random projection as the document embedding,
// and a logistic-regression head trained by SGD.
class StubTrainer : public Trainer {
 public:
  StubTrainer(std::vector<std::string> labels, StubConfig config = {});

  // Fits idf weights and trains the head on labeled source documents. The
  // result is the source model (version 0).
  void fit_source(const std::vector<Document>& docs, int epochs);

  const std::vector<std::string>& labels() const override { return labels_; }
  ModelHandle handle() const override { return {"stub", version_}; }
  EncodeResult encode(const std::vector<Document>& docs) override;
  ModelHandle update(const AugmentedBatch& batch) override;
  IdMatrix predict(const std::vector<Document>& docs) override;

  const StubConfig& config() const { return config_; }

 private:
  struct Sparse {
    std::vector<std::uint32_t> index;
    std::vector<float> value;
  };
  Sparse features(const std::string& text) const;
  void logits(const Sparse& x, std::vector<double>& out) const;
  void train(const std::vector<std::pair<std::string, std::vector<std::string>>>& samples,
             int epochs, std::uint64_t seed);

  std::vector<std::string> labels_;
  StubConfig config_;
  std::vector<float> projection_;  // hash_dim x embed_dim
  std::vector<float> idf_;
  std::vector<double> weights_;  // labels x hash_dim
  std::vector<double> bias_;
  std::uint64_t version_ = 0;
};

// Spawns `command` through /bin/sh and speaks the bridge protocol over its
// stdin/stdout, one request in flight at a time:
//
//   {"op":"info"}                    -> {"labels":[...],"version":v,"model":m}
//   {"op":"encode","docs":[{"id","text"}],"out_dir":d}
//                                    -> {"embeddings":path,"logits":path}
//   {"op":"update","batch_path":p}   -> {"version":v}
//   {"op":"predict","docs":[...]}    -> {"predictions":[{"id","probs":[...]}]}
//   {"op":"shutdown"}                -> {"ok":true}
//
// Any reply carrying "error" raises TrainerError.
class ProcessTrainer : public Trainer {
 public:
  ProcessTrainer(const std::string& command, std::string work_dir);
  ~ProcessTrainer() override;
  ProcessTrainer(const ProcessTrainer&) = delete;
  ProcessTrainer& operator=(const ProcessTrainer&) = delete;

  const std::vector<std::string>& labels() const override { return labels_; }
  ModelHandle handle() const override { return handle_; }
  EncodeResult encode(const std::vector<Document>& docs) override;
  ModelHandle update(const AugmentedBatch& batch) override;
  IdMatrix predict(const std::vector<Document>& docs) override;

 private:
  std::string call(const std::string& request_line);

  std::string work_dir_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string read_buffer_;
  std::vector<std::string> labels_;
  ModelHandle handle_;
  std::uint64_t request_counter_ = 0;
};

// Server side of the protocol around any in-process trainer. Reads request
// lines from `in` until EOF or shutdown; malformed requests get an error
// reply and the session continues. Encode outputs go to `work_dir` unless
// the request names an out_dir.
void serve(Trainer& trainer, std::istream& in, std::ostream& out,
           const std::string& work_dir);

}  // namespace driftforge

#endif  // DRIFTFORGE_TRAINER_H_
