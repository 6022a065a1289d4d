#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "crossaug/corpus.h"
#include "crossaug/rng.h"

namespace crossaug {
namespace {

LabeledSentence sent(std::vector<std::string> w, std::vector<std::string> l) {
  return {std::move(w), std::move(l)};
}

LinearSequence seq(std::vector<std::string> t) { return {std::move(t)}; }

// Random valid BIO sentence over a small word pool.
LabeledSentence random_sentence(Rng& rng, const EntityTypes& types) {
  static const std::vector<std::string> pool{"the", "a", "Jim", "York", "300", "went", ".",
                                             "New", "of",  "Paris"};
  LabeledSentence s;
  const std::size_t n = 1 + rng.below(12);
  std::string open;
  for (std::size_t i = 0; i < n; ++i) {
    s.words.push_back(pool[rng.below(pool.size())]);
    const double u = rng.uniform();
    if (!open.empty() && u < 0.3) {
      s.labels.push_back("I-" + open);
    } else if (u < 0.6) {
      open = types.names()[rng.below(types.names().size())];
      s.labels.push_back("B-" + open);
    } else {
      open.clear();
      s.labels.push_back("O");
    }
  }
  return s;
}

TEST(Conll, ReadsTwoWordSentence) {
  std::istringstream in("Jim\tB-PERSON\nbought\tO\n\n");
  const Corpus c = parse_conll(in);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.sentences[0].words, (std::vector<std::string>{"Jim", "bought"}));
  EXPECT_EQ(c.sentences[0].labels, (std::vector<std::string>{"B-PERSON", "O"}));
}

TEST(Conll, EmptyInputIsAnError) {
  std::istringstream in("");
  try {
    parse_conll(in);
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("empty corpus"), std::string::npos);
  }
}

TEST(Conll, ThreeColumnsIsParseErrorAtThatLine) {
  std::istringstream in("Jim\tB-PERSON\nbought\tO\textra\n");
  try {
    parse_conll(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Conll, InvalidBioNamesTheSentence) {
  std::istringstream in("a\tO\n\nb\tO\nc\tI-GPE\n\n");
  try {
    parse_conll(in);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.sentence(), 1u);
  }
}

TEST(Conll, UnregisteredTypeIsRejected) {
  std::istringstream in("a\tB-ALIEN\n\n");
  EXPECT_THROW(parse_conll(in), ValidationError);
}

TEST(Conll, WriteThenReadIsByteIdentical) {
  const std::string text = "Jim\tB-PERSON\nbought\tO\n\nNew\tB-GPE\nYork\tI-GPE\n\n";
  std::istringstream in(text);
  const Corpus c = parse_conll(in);
  std::ostringstream out;
  write_conll(c, out);
  EXPECT_EQ(out.str(), text);
  std::istringstream again(out.str());
  EXPECT_EQ(parse_conll(again).sentences, c.sentences);
}

TEST(Linearize, LabelsBeforeEntityWordsAndODropped) {
  EXPECT_EQ(linearize(sent({"Jim", "bought", "300", "shares"}, {"B-PERSON", "O", "B-CARDINAL", "O"})),
            seq({"<BOS>", "B-PERSON", "Jim", "bought", "B-CARDINAL", "300", "shares", "<EOS>"}));
  EXPECT_EQ(linearize(sent({"the", "end"}, {"O", "O"})), seq({"<BOS>", "the", "end", "<EOS>"}));
}

TEST(Linearize, MultiWordMentionLabelsEveryWord) {
  // The continuation word carries I-T so B-GPE New I-GPE York decodes back to
  // one mention, while two adjacent one-word mentions stay distinguishable.
  EXPECT_EQ(linearize(sent({"New", "York", "wins"}, {"B-GPE", "I-GPE", "O"})),
            seq({"<BOS>", "B-GPE", "New", "I-GPE", "York", "wins", "<EOS>"}));
  const auto two = sent({"Paris", "London"}, {"B-GPE", "B-GPE"});
  EXPECT_EQ(delinearize(linearize(two)), two);
}

TEST(Delinearize, Examples) {
  EXPECT_EQ(delinearize(seq({"<BOS>", "B-PERSON", "Jim", "bought", "<EOS>"})),
            sent({"Jim", "bought"}, {"B-PERSON", "O"}));
  EXPECT_THROW(delinearize(seq({"<BOS>", "B-GPE", "<EOS>"})), SchemaError);
  EXPECT_THROW(delinearize(seq({"B-GPE", "Paris", "<EOS>"})), SchemaError);
  EXPECT_THROW(delinearize(seq({"<BOS>", "Paris"})), SchemaError);
  EXPECT_THROW(delinearize(seq({"<BOS>", "I-GPE", "Paris", "<EOS>"})), SchemaError);
  EXPECT_THROW(delinearize(seq({"<BOS>", "a", "<PAD>", "b", "<EOS>"})), SchemaError);
}

TEST(Delinearize, SchemaErrorNamesPosition) {
  try {
    delinearize(seq({"<BOS>", "the", "B-GPE", "<EOS>"}));
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.position(), 2u);
  }
}

TEST(RoundTrip, RandomSentencesBothDirections) {
  const auto& types = EntityTypes::ontonotes();
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto s = random_sentence(rng, types);
    ASSERT_NO_THROW(validate_sentence(s, types));
    const auto x = linearize(s);
    EXPECT_EQ(delinearize(x), s);
    EXPECT_EQ(linearize(delinearize(x)), x);
    // one label token per entity word, one span per B
    std::size_t labels = 0, bs = 0;
    for (const auto& t : x.tokens) labels += is_label_token(t, types);
    for (const auto& l : s.labels) bs += l[0] == 'B';
    std::size_t ent_words = 0;
    for (const auto& l : s.labels) ent_words += l != "O";
    EXPECT_EQ(labels, ent_words);
    EXPECT_EQ(extract_entities(delinearize(x)).size(), bs);
  }
}

TEST(Entities, Examples) {
  const auto spans = extract_entities(sent({"John", "Smith", "ran"}, {"B-PERSON", "I-PERSON", "O"}));
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0], (EntitySpan{"John Smith", "PERSON", 0, 2}));
  EXPECT_TRUE(extract_entities(sent({"a", "b"}, {"O", "O"})).empty());
  const auto two = extract_entities(sent({"Paris", "Rome"}, {"B-GPE", "B-GPE"}));
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].end, 1u);
  EXPECT_EQ(two[1].start, 1u);
}

TEST(Similarity, ReproducesPublishedPercentages) {
  EXPECT_NEAR(similarity_from_counts(63666, 14056).similarity_pct, 18.08, 0.005);
  EXPECT_NEAR(similarity_from_counts(76347, 1375).similarity_pct, 1.77, 0.005);
}

TEST(Similarity, IdenticalSingleEntityCorporaIsFull) {
  Corpus c{"x", {sent({"Paris"}, {"B-GPE"})}};
  const auto r = domain_similarity(c, c);
  EXPECT_EQ(r.overlap_count, 1u);
  EXPECT_EQ(r.non_overlap_count, 0u);
  EXPECT_DOUBLE_EQ(r.similarity_pct, 100.0);
}

TEST(Similarity, CountsMentionsAndMatchesType) {
  Corpus train{"a", {sent({"Paris", "Paris", "Jim"}, {"B-GPE", "B-GPE", "B-PERSON"}),
                     sent({"Paris"}, {"B-PERSON"})}};
  Corpus test{"b", {sent({"Paris"}, {"B-GPE"})}};
  const auto r = domain_similarity(train, test);
  EXPECT_EQ(r.overlap_count, 2u);
  EXPECT_EQ(r.non_overlap_count, 2u);
}

TEST(Similarity, NoEntitiesIsAnError) {
  Corpus c{"x", {sent({"a"}, {"O"})}};
  EXPECT_THROW(domain_similarity(c, c), CorpusError);
}

TEST(Similarity, MonotoneWhenTestGrows) {
  const auto& types = EntityTypes::ontonotes();
  Rng rng(5);
  Corpus train{"a", {sent({"Paris"}, {"B-GPE"})}}, test{"b", {}};
  for (int i = 0; i < 20; ++i) train.sentences.push_back(random_sentence(rng, types));
  test.sentences.push_back(train.sentences[0]);
  double prev = domain_similarity(train, test).similarity_pct;
  for (int i = 0; i < 30; ++i) {
    test.sentences.push_back(random_sentence(rng, types));
    const double now = domain_similarity(train, test).similarity_pct;
    EXPECT_GE(now, prev);
    prev = now;
  }
}

}  // namespace
}  // namespace crossaug
