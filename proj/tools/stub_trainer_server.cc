// Serves the trainer protocol on stdin/stdout with the deterministic stub
// model, fitted at startup on a labeled source corpus.

#include <iostream>

#include "CLI11.hpp"
#include "driftforge/corpus.h"
#include "driftforge/error.h"
#include "driftforge/trainer.h"

int main(int argc, char** argv) {
  CLI::App app{"stub trainer server"};
  std::string corpus_path;
  std::string work_dir = ".";
  int epochs = 5;
  driftforge::StubConfig cfg;
  app.add_option("--source", corpus_path, "source corpus JSONL used to fit the model")->required();
  app.add_option("--work-dir", work_dir, "directory for encode outputs");
  app.add_option("--epochs", epochs, "source training epochs");
  app.add_option("--seed", cfg.seed, "model seed");
  app.add_option("--hash-dim", cfg.hash_dim, "hashed feature buckets");
  app.add_option("--embed-dim", cfg.embed_dim, "embedding dimension");
  app.add_option("--lr", cfg.learning_rate, "SGD learning rate");
  app.add_option("--update-epochs", cfg.epochs_per_update, "passes over each update batch");
  app.add_flag("--frozen", cfg.frozen, "accept updates without changing weights");
  CLI11_PARSE(app, argc, argv);

  try {
    const driftforge::Corpus source = driftforge::load_corpus(corpus_path);
    driftforge::StubTrainer trainer(source.labels(), cfg);
    trainer.fit_source(source.docs(), epochs);
    std::ios::sync_with_stdio(false);
    driftforge::serve(trainer, std::cin, std::cout, work_dir);
  } catch (const std::exception& e) {
    std::cerr << "stub_trainer_server: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
