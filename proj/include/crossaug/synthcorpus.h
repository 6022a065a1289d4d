#ifndef CROSSAUG_SYNTHCORPUS_H_
#define CROSSAUG_SYNTHCORPUS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "crossaug/corpus.h"

namespace crossaug {

// Token substitutions that turn "formal" text into the "noisy" domain.
// Only context words (label O) are rewritten; entity words and tags are kept.
class StyleMap {
 public:
  StyleMap() = default;
  // Throws ConfigError unless the map is injective over `vocabulary`
  // (unmapped words count as mapping to themselves).
  StyleMap(std::vector<std::pair<std::string, std::string>> pairs,
           const std::vector<std::string>& vocabulary);

  const std::string& apply(const std::string& word) const;
  LabeledSentence apply(const LabeledSentence& s) const;
  const std::vector<std::pair<std::string, std::string>>& pairs() const { return pairs_; }
  bool maps(const std::string& word) const { return lookup_.count(word) != 0; }

  // Two columns, formal<TAB>noisy, one substitution per line.
  void save(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> pairs_;
  std::map<std::string, std::string> lookup_;
};

struct SynthSpec {
  // Sentence templates: "<TYPE>" is an entity slot, "(a|b)" picks one
  // alternative, everything else is a literal context word.
  std::vector<std::string> templates;
  std::map<std::string, std::vector<std::string>> lexicons;  // type -> names
  std::size_t train_size = 500;
  std::size_t dev_size = 100;
  std::size_t test_size = 100;
  double style_rate = 0.8;    // share of context word types the style map rewrites
  double novel_share = 0.2;   // names of each type held out of train/dev
  double novel_rate = 0.5;    // chance a noisy dev/test mention uses a held-out name
  std::uint64_t seed = 1;

  void validate() const;
  static SynthSpec defaults();
  // 32 training sentences per domain, no dev or test split.
  static SynthSpec fixture();
};

struct SynthPair {
  Corpus formal_train, formal_dev, formal_test;
  Corpus noisy_train, noisy_dev, noisy_test;
  StyleMap style;
  EntityTypes types;
};

// Formal sentences are sampled from the grammar; noisy sentences are
// independent samples passed through the style map, so the two sides are
// not parallel.
SynthPair generate_pair(const SynthSpec& spec);

// Fraction of reference tokens reproduced at the same position, pooled over
// all pairs; <BOS>/<EOS> are not counted.
struct TokenAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double value() const { return total ? static_cast<double>(correct) / total : 0.0; }
};
TokenAccuracy token_accuracy(const std::vector<LinearSequence>& hypotheses,
                             const std::vector<LinearSequence>& references);

}  // namespace crossaug

#endif  // CROSSAUG_SYNTHCORPUS_H_
