#ifndef CROSSAUG_CORPUS_H_
#define CROSSAUG_CORPUS_H_

#include <cstddef>
#include <iosfwd>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crossaug {

// Special symbols shared by every vocabulary; their ids are fixed (see vocab.h).
inline constexpr std::string_view kPadToken = "<PAD>";
inline constexpr std::string_view kUnkToken = "<UNK>";
inline constexpr std::string_view kBosToken = "<BOS>";
inline constexpr std::string_view kEosToken = "<EOS>";
inline constexpr std::string_view kMaskToken = "<MSK>";

bool is_special_token(std::string_view token);

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed CoNLL input; carries the 1-based line number.
class ParseError : public CorpusError {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A sentence that breaks the BIO rules; carries the 0-based sentence index.
class ValidationError : public CorpusError {
 public:
  ValidationError(std::size_t sentence, const std::string& what);
  std::size_t sentence() const { return sentence_; }

 private:
  std::size_t sentence_;
};

// A linear sequence that cannot be delinearized; carries the token position.
class SchemaError : public CorpusError {
 public:
  SchemaError(std::size_t position, const std::string& what);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Set of entity types a corpus may use. Defaults to the 18 OntoNotes types.
class EntityTypes {
 public:
  EntityTypes();
  explicit EntityTypes(std::vector<std::string> types);

  static const EntityTypes& ontonotes();

  bool contains(std::string_view type) const;
  const std::vector<std::string>& names() const { return ordered_; }

 private:
  std::vector<std::string> ordered_;
  std::set<std::string, std::less<>> lookup_;
};

struct LabeledSentence {
  std::vector<std::string> words;
  std::vector<std::string> labels;

  std::size_t size() const { return words.size(); }
  bool operator==(const LabeledSentence&) const = default;
};

// Model-side view of a sentence: <BOS> ... <EOS> with a label token placed
// before every entity word and the O labels dropped, e.g.
//   <BOS> B-GPE New I-GPE York wins <EOS>
struct LinearSequence {
  std::vector<std::string> tokens;

  bool operator==(const LinearSequence&) const = default;
};

struct EntitySpan {
  std::string surface;
  std::string entity_type;
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive

  bool operator==(const EntitySpan&) const = default;
};

struct Corpus {
  std::string domain_id;
  std::vector<LabeledSentence> sentences;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
};

struct DomainSimilarityReport {
  std::size_t non_overlap_count = 0;
  std::size_t overlap_count = 0;
  double similarity_pct = 0.0;
};

// "B-T"/"I-T" with T registered; anything else is an ordinary word.
bool is_label_token(std::string_view token, const EntityTypes& types);

// Empty string when the sentence is valid, otherwise the reason.
std::string bio_violation(const LabeledSentence& s, const EntityTypes& types);
void validate_sentence(const LabeledSentence& s, const EntityTypes& types,
                       std::size_t index = 0);

Corpus parse_conll(std::istream& in, const EntityTypes& types = EntityTypes::ontonotes(),
                   std::string domain_id = {});
Corpus read_conll(const std::string& path, const EntityTypes& types = EntityTypes::ontonotes(),
                  std::string domain_id = {});
void write_conll(const Corpus& corpus, std::ostream& out);
void write_conll(const Corpus& corpus, const std::string& path);

LinearSequence linearize(const LabeledSentence& s);
LabeledSentence delinearize(const LinearSequence& x,
                            const EntityTypes& types = EntityTypes::ontonotes());

std::vector<EntitySpan> extract_entities(const LabeledSentence& s);

DomainSimilarityReport similarity_from_counts(std::size_t non_overlap, std::size_t overlap);
// Share of train entity mentions whose (surface, type) also occurs in test.
DomainSimilarityReport domain_similarity(const Corpus& train, const Corpus& test);

}  // namespace crossaug

#endif  // CROSSAUG_CORPUS_H_
