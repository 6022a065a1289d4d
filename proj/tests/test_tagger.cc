#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <tuple>

#include "crossaug/synthcorpus.h"
#include "crossaug/tagger.h"

namespace crossaug {
namespace {

LabeledSentence sent(std::vector<std::string> w, std::vector<std::string> l) {
  return {std::move(w), std::move(l)};
}

const SynthPair& fixture() {
  static const SynthPair p = generate_pair(SynthSpec::fixture());
  return p;
}

Corpus first(const Corpus& c, std::size_t n) {
  Corpus out{c.domain_id, {c.sentences.begin(), c.sentences.begin() + static_cast<long>(n)}};
  return out;
}

TaggerConfig quick() {
  TaggerConfig c;
  c.embed_dim = 16;
  c.hidden_dim = 24;
  c.batch_size = 8;
  c.epochs = 20;
  return c;
}

TEST(F1, CountsArithmetic) {
  const auto r = f1_from_counts(1, 1, 1);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
  const auto z = f1_from_counts(0, 0, 0);
  EXPECT_EQ(z.precision, 0.0);
  EXPECT_EQ(z.recall, 0.0);
  EXPECT_EQ(z.f1, 0.0);
}

TEST(F1, PerfectAndHalf) {
  Corpus gold{"g", {sent({"Jim", "met", "Ann"}, {"B-PERSON", "O", "B-PERSON"})}};
  EXPECT_DOUBLE_EQ(micro_f1(gold, gold).f1, 1.0);
  Corpus pred{"p", {sent({"Jim", "met", "Ann"}, {"B-PERSON", "B-ORG", "O"})}};
  const auto r = micro_f1(gold, pred);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
}

TEST(F1, ShapeMismatchIsAnError) {
  Corpus a{"a", {sent({"x"}, {"O"})}};
  Corpus b{"b", {sent({"x", "y"}, {"O", "O"})}};
  Corpus c{"c", {}};
  EXPECT_THROW(micro_f1(a, b), ConfigError);
  EXPECT_THROW(micro_f1(a, c), ConfigError);
}

LabeledSentence random_labeled(Rng& rng, std::size_t n) {
  static const std::vector<std::string> types{"PERSON", "GPE", "ORG"};
  LabeledSentence s;
  std::string open;
  for (std::size_t i = 0; i < n; ++i) {
    s.words.push_back("w");
    const double u = rng.uniform();
    if (!open.empty() && u < 0.3) {
      s.labels.push_back("I-" + open);
    } else if (u < 0.6) {
      open = types[rng.below(3)];
      s.labels.push_back("B-" + open);
    } else {
      open.clear();
      s.labels.push_back("O");
    }
  }
  return s;
}

using SpanKey = std::tuple<std::size_t, std::size_t, std::size_t, std::string>;

std::set<SpanKey> span_set(const Corpus& c) {
  std::set<SpanKey> out;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const auto& l = c.sentences[k].labels;
    for (std::size_t i = 0; i < l.size(); ++i) {
      if (l[i][0] != 'B') continue;
      std::size_t j = i + 1;
      while (j < l.size() && l[j] == "I-" + l[i].substr(2)) ++j;
      out.insert({k, i, j, l[i].substr(2)});
    }
  }
  return out;
}

TEST(F1, RandomCasesMatchSpanSetOracle) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    Corpus gold{"g", {}}, pred{"p", {}};
    for (int k = 0; k < 10; ++k) {
      const std::size_t n = 1 + rng.below(8);
      gold.sentences.push_back(random_labeled(rng, n));
      pred.sentences.push_back(random_labeled(rng, n));
    }
    const auto g = span_set(gold), p = span_set(pred);
    std::size_t tp = 0;
    for (const auto& s : p) tp += g.count(s);
    const auto expect = f1_from_counts(tp, p.size() - tp, g.size() - tp);
    const auto got = micro_f1(gold, pred);
    EXPECT_EQ(got.true_positives, expect.true_positives);
    EXPECT_DOUBLE_EQ(got.f1, expect.f1);
    // swapping roles swaps precision and recall
    const auto swapped = micro_f1(pred, gold);
    EXPECT_DOUBLE_EQ(swapped.precision, got.recall);
    EXPECT_DOUBLE_EQ(swapped.recall, got.precision);
    EXPECT_GE(got.f1, 0.0);
    EXPECT_LE(got.f1, 1.0);
  }
}

TEST(RepairBio, OrphansBecomeBeginAndValidInputIsUntouched) {
  std::vector<std::string> l{"I-GPE", "I-GPE", "O", "I-ORG", "B-PERSON", "I-GPE"};
  repair_bio(l);
  EXPECT_EQ(l, (std::vector<std::string>{"B-GPE", "I-GPE", "O", "B-ORG", "B-PERSON", "B-GPE"}));
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    auto s = random_labeled(rng, 1 + rng.below(10));
    auto copy = s.labels;
    repair_bio(copy);
    EXPECT_EQ(copy, s.labels);
  }
}

TEST(Tagger, OverfitsSmallFixture) {
  const Corpus train = first(fixture().formal_train, 20);
  TaggerConfig cfg;  // default widths, small batches so 20 epochs are 100 steps
  cfg.batch_size = 4;
  cfg.lr = 1e-2;
  const Tagger t = train_tagger(train, cfg, fixture().types);
  std::size_t correct = 0, total = 0;
  for (const auto& s : train.sentences) {
    const auto tags = t.tag(s.words);
    ASSERT_EQ(tags.size(), s.words.size());
    EXPECT_TRUE(bio_violation(LabeledSentence{s.words, tags}, fixture().types).empty());
    for (std::size_t i = 0; i < tags.size(); ++i) correct += tags[i] == s.labels[i];
    total += tags.size();
  }
  EXPECT_GE(static_cast<double>(correct) / total, 0.95);
}

TEST(Tagger, ZeroLearningRateAndDeterminism) {
  const Corpus train = first(fixture().formal_train, 10);
  auto cfg = quick();
  cfg.lr = 0;
  cfg.epochs = 1;
  const Tagger one = train_tagger(train, cfg, fixture().types);
  cfg.epochs = 3;
  const Tagger three = train_tagger(train, cfg, fixture().types);
  for (std::size_t i = 0; i < one.parameters().size(); ++i) {
    EXPECT_EQ(one.parameters()[i].value, three.parameters()[i].value);
  }
  auto live = quick();
  live.epochs = 2;
  const Tagger a = train_tagger(train, live, fixture().types);
  const Tagger b = train_tagger(train, live, fixture().types);
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    EXPECT_EQ(a.parameters()[i].value, b.parameters()[i].value);
  }
}

TEST(Tagger, UnregisteredLabelIsRejected) {
  Corpus train{"t", {sent({"Jim"}, {"B-PERSON"}), sent({"Acme"}, {"B-ORG"})}};
  EXPECT_THROW(train_tagger(train, quick(), EntityTypes({"PERSON"})), ValidationError);
  EXPECT_THROW(train_tagger(Corpus{"e", {}}, quick(), EntityTypes({"PERSON"})), std::exception);
}

TEST(Tagger, SaveLoadGivesSameTags) {
  const Corpus train = first(fixture().formal_train, 10);
  auto cfg = quick();
  cfg.epochs = 2;
  const Tagger t = train_tagger(train, cfg, fixture().types);
  const auto path = (std::filesystem::temp_directory_path() / "crossaug_tagger_test.ckpt").string();
  t.save(path);
  const Tagger back = Tagger::load(path, cfg);
  EXPECT_EQ(back.tag_corpus(train).sentences, t.tag_corpus(train).sentences);
  for (const char* ext : {"", ".words", ".labels"}) std::filesystem::remove(path + ext);
}

TEST(Experiment, EmptyGenMatchesSourceAndTableHasThreeRows) {
  const auto& p = fixture();
  auto cfg = quick();
  cfg.epochs = 2;
  const Corpus src = first(p.formal_train, 12), tgt = first(p.noisy_train, 12);
  const Corpus dev = first(p.noisy_train, 6);
  const auto r = run_experiment(src, tgt, Corpus{"gen", {}}, dev, dev, cfg, p.types);
  EXPECT_EQ(r.source.test.f1, r.gen.test.f1);
  EXPECT_EQ(r.gain(), 0.0);
  EXPECT_EQ(r.gen.train_size, 12u);
  const auto table = r.table();
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
  EXPECT_EQ(table.rfind("condition\ttrain_size\t", 0), 0u);
}

}  // namespace
}  // namespace crossaug
