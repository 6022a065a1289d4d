#include "crossaug/augmenter.h"

#include <fstream>
#include <sstream>

#include "crossaug/trainer.h"

namespace crossaug {

const char* rule_name(FilterRule r) {
  switch (r) {
    case FilterRule::kAccept:
      return "accept";
    case FilterRule::kSchema:
      return "schema";
    case FilterRule::kSpecial:
      return "unk_or_mask";
    case FilterRule::kNoEntity:
      return "no_entity";
  }
  return "?";
}

FilterRule post_process(const LinearSequence& x, const EntityTypes& types) {
  try {
    delinearize(x, types);
  } catch (const SchemaError&) {
    return FilterRule::kSchema;
  }
  bool has_label = false;
  for (const auto& t : x.tokens) {
    if (t == kUnkToken || t == kMaskToken) return FilterRule::kSpecial;
  }
  for (const auto& t : x.tokens) has_label = has_label || is_label_token(t, types);
  return has_label ? FilterRule::kAccept : FilterRule::kNoEntity;
}

std::string AugmentationReport::summary() const {
  std::ostringstream out;
  out << "produced\t" << counts.produced << '\n'
      << "rejected_rule1_schema\t" << counts.rejected_schema << '\n'
      << "rejected_rule2_unk_or_mask\t" << counts.rejected_special << '\n'
      << "rejected_rule3_no_entity\t" << counts.rejected_no_entity << '\n'
      << "accepted\t" << counts.accepted << '\n';
  if (similarity) {
    char pct[32];
    std::snprintf(pct, sizeof(pct), "%.2f", similarity->similarity_pct);
    out << "non_overlap\t" << similarity->non_overlap_count << '\n'
        << "overlap\t" << similarity->overlap_count << '\n'
        << "similarity_pct\t" << pct << '\n';
  }
  return out.str();
}

void AugmentationReport::save_summary(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write " + path);
  out << summary();
}

AugmentationReport augment(CrossDomainAutoencoder& model, const Vocabulary& src_vocab,
                           const Vocabulary& tgt_vocab, const Corpus& input, Domain from,
                           const EntityTypes& types, std::size_t batch_size) {
  if (!model.initialized()) throw ConfigError("augment: model is not trained or loaded");
  const Vocabulary& in_vocab = from == Domain::kSource ? src_vocab : tgt_vocab;
  const Vocabulary& out_vocab = from == Domain::kSource ? tgt_vocab : src_vocab;
  if (in_vocab.size() != model.vocab_size(from) || out_vocab.size() != model.vocab_size(other(from))) {
    throw ConfigError("augment: vocabularies do not match the model");
  }
  AugmentationReport report;
  report.generated.domain_id = std::string(domain_name(other(from))) + "-gen";
  if (input.empty()) return report;

  std::vector<std::vector<int>> ids;
  ids.reserve(input.size());
  for (const auto& s : input.sentences) ids.push_back(in_vocab.encode(linearize(s)));
  const auto out = transform(model, ids, from, batch_size);
  for (const auto& seq : out) {
    const LinearSequence x{out_vocab.decode(seq)};
    ++report.counts.produced;
    switch (post_process(x, types)) {
      case FilterRule::kSchema:
        ++report.counts.rejected_schema;
        break;
      case FilterRule::kSpecial:
        ++report.counts.rejected_special;
        break;
      case FilterRule::kNoEntity:
        ++report.counts.rejected_no_entity;
        break;
      case FilterRule::kAccept:
        ++report.counts.accepted;
        report.generated.sentences.push_back(delinearize(x, types));
        break;
    }
  }
  return report;
}

}  // namespace crossaug
