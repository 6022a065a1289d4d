#include "crossaug/corpus.h"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

namespace crossaug {

bool is_special_token(std::string_view token) {
  return token == kPadToken || token == kUnkToken || token == kBosToken ||
         token == kEosToken || token == kMaskToken;
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : CorpusError("line " + std::to_string(line) + ": " + what), line_(line) {}

ValidationError::ValidationError(std::size_t sentence, const std::string& what)
    : CorpusError("sentence " + std::to_string(sentence) + ": " + what), sentence_(sentence) {}

SchemaError::SchemaError(std::size_t position, const std::string& what)
    : CorpusError("position " + std::to_string(position) + ": " + what), position_(position) {}

EntityTypes::EntityTypes() : EntityTypes(ontonotes()) {}

EntityTypes::EntityTypes(std::vector<std::string> types) : ordered_(std::move(types)) {
  for (const auto& t : ordered_) lookup_.insert(t);
}

const EntityTypes& EntityTypes::ontonotes() {
  static const EntityTypes types(std::vector<std::string>{
      "PERSON", "NORP", "FAC", "ORG", "GPE", "LOC", "PRODUCT", "EVENT", "WORK_OF_ART", "LAW",
      "LANGUAGE", "DATE", "TIME", "PERCENT", "MONEY", "QUANTITY", "ORDINAL", "CARDINAL"});
  return types;
}

bool EntityTypes::contains(std::string_view type) const { return lookup_.contains(type); }

namespace {

// Splits "B-T" into ('B', "T"); returns ('\0', "") for anything else.
std::pair<char, std::string_view> split_tag(std::string_view tag) {
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
    return {tag[0], tag.substr(2)};
  }
  return {'\0', {}};
}

}  // namespace

bool is_label_token(std::string_view token, const EntityTypes& types) {
  auto [prefix, type] = split_tag(token);
  return prefix != '\0' && types.contains(type);
}

std::string bio_violation(const LabeledSentence& s, const EntityTypes& types) {
  if (s.words.empty()) return "empty sentence";
  if (s.words.size() != s.labels.size()) {
    return std::to_string(s.words.size()) + " words but " + std::to_string(s.labels.size()) +
           " labels";
  }
  std::string_view open;  // type of the entity the previous token belongs to
  for (std::size_t i = 0; i < s.labels.size(); ++i) {
    const std::string& tag = s.labels[i];
    if (tag == "O") {
      open = {};
      continue;
    }
    auto [prefix, type] = split_tag(tag);
    if (prefix == '\0') return "token " + std::to_string(i) + ": malformed tag '" + tag + "'";
    if (!types.contains(type)) {
      return "token " + std::to_string(i) + ": unregistered entity type '" + std::string(type) +
             "'";
    }
    if (prefix == 'I' && open != type) {
      return "token " + std::to_string(i) + ": '" + tag + "' does not continue an entity";
    }
    open = type;
  }
  return {};
}

void validate_sentence(const LabeledSentence& s, const EntityTypes& types, std::size_t index) {
  std::string why = bio_violation(s, types);
  if (!why.empty()) throw ValidationError(index, why);
}

Corpus parse_conll(std::istream& in, const EntityTypes& types, std::string domain_id) {
  Corpus corpus{std::move(domain_id), {}};
  LabeledSentence current;
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (current.words.empty()) return;
    validate_sentence(current, types, corpus.sentences.size());
    corpus.sentences.push_back(std::move(current));
    current = {};
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token, tag, extra;
    if (!(fields >> token)) {
      flush();
      continue;
    }
    if (!(fields >> tag)) throw ParseError(line_no, "expected 2 columns, found 1");
    if (fields >> extra) {
      std::size_t n = 3;
      while (fields >> extra) ++n;
      throw ParseError(line_no, "expected 2 columns, found " + std::to_string(n));
    }
    current.words.push_back(std::move(token));
    current.labels.push_back(std::move(tag));
  }
  flush();
  if (corpus.sentences.empty()) throw CorpusError("empty corpus");
  return corpus;
}

Corpus read_conll(const std::string& path, const EntityTypes& types, std::string domain_id) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open " + path);
  return parse_conll(in, types, std::move(domain_id));
}

void write_conll(const Corpus& corpus, std::ostream& out) {
  for (const auto& s : corpus.sentences) {
    for (std::size_t i = 0; i < s.words.size(); ++i) {
      out << s.words[i] << '\t' << s.labels[i] << '\n';
    }
    out << '\n';
  }
}

void write_conll(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write " + path);
  write_conll(corpus, out);
  if (!out) throw CorpusError("write failed: " + path);
}

LinearSequence linearize(const LabeledSentence& s) {
  LinearSequence x;
  x.tokens.reserve(2 * s.words.size() + 2);
  x.tokens.emplace_back(kBosToken);
  for (std::size_t i = 0; i < s.words.size(); ++i) {
    if (s.labels[i] != "O") x.tokens.push_back(s.labels[i]);
    x.tokens.push_back(s.words[i]);
  }
  x.tokens.emplace_back(kEosToken);
  return x;
}

LabeledSentence delinearize(const LinearSequence& x, const EntityTypes& types) {
  const auto& t = x.tokens;
  if (t.size() < 2 || t.front() != kBosToken) {
    throw SchemaError(0, "sequence must start with " + std::string(kBosToken));
  }
  if (t.back() != kEosToken) {
    throw SchemaError(t.size() - 1, "sequence must end with " + std::string(kEosToken));
  }
  LabeledSentence s;
  std::string pending;  // label waiting for its word
  std::size_t pending_at = 0;
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    const std::string& tok = t[i];
    if (tok == kBosToken || tok == kEosToken || tok == kPadToken) {
      throw SchemaError(i, "marker " + tok + " inside sequence");
    }
    if (is_label_token(tok, types)) {
      if (!pending.empty()) throw SchemaError(pending_at, "label " + pending + " has no word");
      pending = tok;
      pending_at = i;
      continue;
    }
    if (pending.empty()) {
      s.labels.emplace_back("O");
    } else {
      s.labels.push_back(std::move(pending));
      pending.clear();
    }
    s.words.push_back(tok);
  }
  if (!pending.empty()) throw SchemaError(pending_at, "label " + pending + " has no word");
  if (s.words.empty()) throw SchemaError(1, "sequence has no words");
  std::string why = bio_violation(s, types);
  if (!why.empty()) throw SchemaError(0, why);
  return s;
}

std::vector<EntitySpan> extract_entities(const LabeledSentence& s) {
  std::vector<EntitySpan> spans;
  for (std::size_t i = 0; i < s.labels.size(); ++i) {
    auto [prefix, type] = split_tag(s.labels[i]);
    if (prefix == '\0') continue;
    // A stray I-T (invalid BIO) still opens a mention so nothing is lost.
    if (prefix == 'I' && !spans.empty() && spans.back().end == i &&
        spans.back().entity_type == type) {
      spans.back().surface += ' ';
      spans.back().surface += s.words[i];
      spans.back().end = i + 1;
      continue;
    }
    spans.push_back({s.words[i], std::string(type), i, i + 1});
  }
  return spans;
}

DomainSimilarityReport similarity_from_counts(std::size_t non_overlap, std::size_t overlap) {
  if (non_overlap + overlap == 0) throw CorpusError("no entities");
  DomainSimilarityReport r;
  r.non_overlap_count = non_overlap;
  r.overlap_count = overlap;
  r.similarity_pct = 100.0 * static_cast<double>(overlap) /
                     static_cast<double>(overlap + non_overlap);
  return r;
}

DomainSimilarityReport domain_similarity(const Corpus& train, const Corpus& test) {
  if (train.empty() || test.empty()) throw CorpusError("empty corpus");
  std::set<std::pair<std::string, std::string>> gold;
  for (const auto& s : test.sentences) {
    for (auto& e : extract_entities(s)) gold.emplace(std::move(e.surface), std::move(e.entity_type));
  }
  if (gold.empty()) throw CorpusError("no entities");
  std::size_t overlap = 0, non_overlap = 0;
  for (const auto& s : train.sentences) {
    for (auto& e : extract_entities(s)) {
      if (gold.contains({e.surface, e.entity_type})) {
        ++overlap;
      } else {
        ++non_overlap;
      }
    }
  }
  return similarity_from_counts(non_overlap, overlap);
}

}  // namespace crossaug
