#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "crossaug/augmenter.h"
#include "crossaug/synthcorpus.h"
#include "crossaug/trainer.h"

namespace crossaug {
namespace {

LinearSequence seq(std::vector<std::string> t) { return {std::move(t)}; }

TEST(PostProcess, OneExamplePerRule) {
  EXPECT_EQ(post_process(seq({"<BOS>", "B-GPE", "<EOS>"})), FilterRule::kSchema);
  EXPECT_EQ(post_process(seq({"<BOS>", "B-GPE", "Paris", "<UNK>", "<EOS>"})), FilterRule::kSpecial);
  EXPECT_EQ(post_process(seq({"<BOS>", "the", "<MSK>", "<EOS>"})), FilterRule::kSpecial);
  EXPECT_EQ(post_process(seq({"<BOS>", "the", "end", "<EOS>"})), FilterRule::kNoEntity);
  EXPECT_EQ(post_process(seq({"<BOS>", "B-GPE", "Paris", "wins", "<EOS>"})), FilterRule::kAccept);
}

TEST(PostProcess, RulesApplyInOrder) {
  // schema and unknown-token problems together: rule 1 wins
  EXPECT_EQ(post_process(seq({"<BOS>", "<UNK>", "B-GPE", "<EOS>"})), FilterRule::kSchema);
  // unknown token and no entity: rule 2 wins
  EXPECT_EQ(post_process(seq({"<BOS>", "<UNK>", "<EOS>"})), FilterRule::kSpecial);
  // stray markers count as schema violations
  EXPECT_EQ(post_process(seq({"<BOS>", "B-GPE", "Paris", "<PAD>", "<EOS>"})), FilterRule::kSchema);
  EXPECT_EQ(post_process(seq({"<BOS>", "B-GPE", "<BOS>", "Paris", "<EOS>"})), FilterRule::kSchema);
  EXPECT_EQ(post_process(seq({"<BOS>", "B-GPE", "Paris"})), FilterRule::kSchema);
  EXPECT_EQ(post_process(seq({})), FilterRule::kSchema);
}

TEST(PostProcess, LabelTypesFollowRegistry) {
  const EntityTypes only_person({"PERSON"});
  // B-GPE is an ordinary word under this registry, so there is no entity
  EXPECT_EQ(post_process(seq({"<BOS>", "B-GPE", "Paris", "<EOS>"}), only_person), FilterRule::kNoEntity);
}

TEST(Augment, UninitializedModelIsRejected) {
  CrossDomainAutoencoder m;
  Vocabulary v;
  EXPECT_THROW(augment(m, v, v, Corpus{"x", {}}, Domain::kSource), ConfigError);
}

TEST(Augment, EmptyInputGivesEmptyReport) {
  ModelConfig c;
  c.embed_dim = c.encoder_hidden = c.decoder_hidden = c.discriminator_hidden = 3;
  const Vocabulary v = build_vocab(Corpus{"x", {{{"a"}, {"O"}}}});
  c.src_vocab = c.tgt_vocab = v.size();
  CrossDomainAutoencoder m(c);
  m.initialize(1);
  const auto r = augment(m, v, v, Corpus{"x", {}}, Domain::kSource);
  EXPECT_TRUE(r.generated.empty());
  EXPECT_EQ(r.counts, AugmentationCounts{});
}

TEST(Augment, ReportInvariantsAndDeterminism) {
  const auto p = generate_pair(SynthSpec::fixture());
  Profile pr = desk_profile();
  pr.model.embed_dim = 8;
  pr.model.encoder_hidden = pr.model.decoder_hidden = 8;
  pr.train.phase1_epochs = 1;
  const auto data = prepare_data(p.formal_train, p.noisy_train, nullptr, nullptr, pr.train);
  auto st = init_state(pr.model, data, pr.train);
  train_phase1(st, data, pr.train);
  const auto a = augment(st.best, data.src_vocab, data.tgt_vocab, p.formal_train, Domain::kSource,
                         p.types, 5);
  const auto b = augment(st.best, data.src_vocab, data.tgt_vocab, p.formal_train, Domain::kSource,
                         p.types, 32);
  const auto& n = a.counts;
  EXPECT_EQ(n.produced, p.formal_train.size());
  EXPECT_EQ(n.produced, n.accepted + n.rejected_schema + n.rejected_special + n.rejected_no_entity);
  EXPECT_EQ(n.accepted, a.generated.size());
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.generated.sentences, b.generated.sentences);
  for (const auto& s : a.generated.sentences) {
    EXPECT_EQ(post_process(linearize(s), p.types), FilterRule::kAccept);
    EXPECT_EQ(delinearize(linearize(s), p.types), s);
  }
  EXPECT_THROW(augment(st.best, data.tgt_vocab, data.src_vocab, p.formal_train, Domain::kSource,
                       p.types),
               ConfigError);
}

// A model trained with both domains set to the same corpus and no input
// noise learns the identity map.
TEST(Augment, IdentityOverfitReproducesInput) {
  const auto p = generate_pair(SynthSpec::fixture());
  const Corpus c{"x", {p.formal_train.sentences.begin(), p.formal_train.sentences.begin() + 8}};
  Profile pr = desk_profile();
  pr.model.embed_dim = 16;
  pr.model.encoder_hidden = pr.model.decoder_hidden = 32;
  pr.model.dropout_rate = 0;
  pr.train.batch_size = 4;
  pr.train.generator_lr = 1e-2;
  pr.train.phase1_epochs = 400;
  pr.train.noise.p_drop = pr.train.noise.p_mask = pr.train.noise.p_shuffle = 0;
  const auto data = prepare_data(c, c, &c, &c, pr.train);
  auto st = init_state(pr.model, data, pr.train);
  AugmentationReport last;
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord&) {
    last = augment(st.model, data.src_vocab, data.tgt_vocab, c, Domain::kSource, p.types);
    return last.generated.sentences != c.sentences;
  };
  train_phase1(st, data, pr.train, hooks);
  EXPECT_EQ(last.generated.sentences, c.sentences);
  EXPECT_EQ(last.counts.accepted, c.size());
  EXPECT_EQ(last.counts.produced, c.size());
}

TEST(Report, SummaryListsFiveCounts) {
  AugmentationReport r;
  r.counts = {10, 1, 2, 3, 4};
  const auto path = (std::filesystem::temp_directory_path() / "crossaug_report_test.txt").string();
  r.save_summary(path);
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(text,
            "produced\t10\nrejected_rule1_schema\t1\nrejected_rule2_unk_or_mask\t2\n"
            "rejected_rule3_no_entity\t3\naccepted\t4\n");
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace crossaug
