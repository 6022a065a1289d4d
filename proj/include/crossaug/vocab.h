#ifndef CROSSAUG_VOCAB_H_
#define CROSSAUG_VOCAB_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crossaug/corpus.h"
#include "crossaug/errors.h"

namespace crossaug {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kBosId = 2;
inline constexpr int kEosId = 3;
inline constexpr int kMaskId = 4;
inline constexpr std::size_t kNumSpecials = 5;

// Symbol table of one domain. Ids 0-4 are always <PAD> <UNK> <BOS> <EOS> <MSK>.
class Vocabulary {
 public:
  Vocabulary();
  explicit Vocabulary(std::vector<std::string> symbols);

  std::size_t size() const { return symbols_.size(); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  const std::string& symbol(int id) const;
  int id_of(std::string_view symbol) const;  // kUnkId when absent
  bool contains(std::string_view symbol) const;

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<int> encode(const LinearSequence& x) const { return encode(x.tokens); }
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  bool operator==(const Vocabulary& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> ids_;
};

// Specials plus the max_size most frequent tokens of the linearized corpus;
// ties go to the token seen first.
Vocabulary build_vocab(const Corpus& corpus, std::size_t max_size = 10000);

}  // namespace crossaug

#endif  // CROSSAUG_VOCAB_H_
