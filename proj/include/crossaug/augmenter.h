#ifndef CROSSAUG_AUGMENTER_H_
#define CROSSAUG_AUGMENTER_H_

#include <cstddef>
#include <optional>
#include <string>

#include "crossaug/corpus.h"
#include "crossaug/model.h"
#include "crossaug/vocab.h"

namespace crossaug {

// Post-processing filters, checked in this order.
enum class FilterRule {
  kAccept = 0,
  kSchema = 1,     // not a well-formed linearized BIO sequence
  kSpecial = 2,    // contains <UNK> or <MSK>
  kNoEntity = 3,   // no entity label at all
};

const char* rule_name(FilterRule r);

FilterRule post_process(const LinearSequence& x,
                        const EntityTypes& types = EntityTypes::ontonotes());

struct AugmentationCounts {
  std::size_t produced = 0;
  std::size_t rejected_schema = 0;
  std::size_t rejected_special = 0;
  std::size_t rejected_no_entity = 0;
  std::size_t accepted = 0;

  bool operator==(const AugmentationCounts&) const = default;
};

struct AugmentationReport {
  Corpus generated;
  AugmentationCounts counts;
  // Filled by callers that have a reference corpus to compare against.
  std::optional<DomainSimilarityReport> similarity;

  // key<TAB>value lines
  std::string summary() const;
  void save_summary(const std::string& path) const;
};

// One candidate per input sentence: encode in `from`, greedy-decode into the
// other domain no longer than the input, filter, delinearize. Accepted
// sentences keep the input order.
AugmentationReport augment(CrossDomainAutoencoder& model, const Vocabulary& src_vocab,
                           const Vocabulary& tgt_vocab, const Corpus& input, Domain from,
                           const EntityTypes& types = EntityTypes::ontonotes(),
                           std::size_t batch_size = 32);

}  // namespace crossaug

#endif  // CROSSAUG_AUGMENTER_H_
