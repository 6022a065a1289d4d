#ifndef CROSSAUG_TAGGER_H_
#define CROSSAUG_TAGGER_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "crossaug/autodiff.h"
#include "crossaug/corpus.h"
#include "crossaug/vocab.h"

namespace crossaug {

struct TaggerConfig {
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;  // per direction
  double dropout = 0.1;
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double lr = 5e-3;  // Adam
  double grad_clip = 5.0;
  // Chance that a word seen once in training is read as <UNK>, so the
  // unknown-word vector gets trained.
  double unk_replace = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
};

struct F1Report {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

F1Report f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

// Entity-level exact (span, type) matching pooled over the corpus.
F1Report micro_f1(const Corpus& gold, const Corpus& predicted);

// Bi-LSTM token classifier with a softmax over BIO labels.
class Tagger {
 public:
  Tagger() = default;
  Tagger(const TaggerConfig& cfg, Vocabulary words, const EntityTypes& types);

  // Labels per word, repaired to valid BIO (an orphan I-T becomes B-T).
  std::vector<std::string> tag(const std::vector<std::string>& words) const;
  Corpus tag_corpus(const Corpus& corpus) const;

  const Vocabulary& words() const { return words_; }
  const std::vector<std::string>& labels() const { return labels_; }
  int label_id(const std::string& label) const;  // -1 when unknown
  const TaggerConfig& config() const { return cfg_; }

  std::vector<ad::Parameter>& parameters() { return params_; }
  const std::vector<ad::Parameter>& parameters() const { return params_; }
  std::vector<ad::Parameter*> parameter_ptrs();

  // Per-token log-probabilities, (batch*steps) x labels, row b*steps+t.
  ad::Var forward(ad::Graph& g, const std::vector<std::vector<int>>& ids, std::size_t steps,
                  Rng* dropout_rng) const;

  void save(const std::string& path) const;  // checkpoint + .words + .labels
  static Tagger load(const std::string& path, const TaggerConfig& cfg);

 private:
  enum { kEmbed, kFwdW, kFwdB, kBwdW, kBwdB, kOutW, kOutB, kNumParams };
  TaggerConfig cfg_;
  Vocabulary words_;
  std::vector<std::string> labels_;
  std::vector<ad::Parameter> params_;
};

// Best dev-F1 epoch when dev is given, otherwise the last epoch.
Tagger train_tagger(const Corpus& train, const TaggerConfig& cfg, const EntityTypes& types,
                    const Corpus* dev = nullptr);

// Repairs orphan I-T tags in place.
void repair_bio(std::vector<std::string>& labels);

struct ExperimentArm {
  std::string condition;
  std::size_t train_size = 0;
  F1Report test;
};

struct ExperimentResult {
  ExperimentArm source;
  ExperimentArm gen;
  ExperimentArm target;
  double gain() const { return 100.0 * (gen.test.f1 - source.test.f1); }  // F1 points
  // condition, train size, P, R, F1 (percent), gain over Source
  std::string table() const;
};

// Source-only, Source+Gen and Target-only taggers, each selected on tgt_dev
// and scored on tgt_test.
ExperimentResult run_experiment(const Corpus& src, const Corpus& tgt_train, const Corpus& gen,
                                const Corpus& tgt_dev, const Corpus& tgt_test,
                                const TaggerConfig& cfg, const EntityTypes& types);

}  // namespace crossaug

#endif  // CROSSAUG_TAGGER_H_
