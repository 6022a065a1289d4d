#include "crossaug/vocab.h"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace crossaug {

namespace {

std::vector<std::string> special_symbols() {
  return {std::string(kPadToken), std::string(kUnkToken), std::string(kBosToken),
          std::string(kEosToken), std::string(kMaskToken)};
}

}  // namespace

Vocabulary::Vocabulary() : Vocabulary(special_symbols()) {}

Vocabulary::Vocabulary(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  const auto specials = special_symbols();
  if (symbols_.size() < kNumSpecials ||
      !std::equal(specials.begin(), specials.end(), symbols_.begin())) {
    throw ConfigError("vocabulary must start with the 5 special symbols");
  }
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!ids_.emplace(symbols_[i], static_cast<int>(i)).second) {
      throw ConfigError("duplicate vocabulary symbol '" + symbols_[i] + "'");
    }
  }
}

const std::string& Vocabulary::symbol(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size()) {
    throw std::out_of_range("vocabulary id " + std::to_string(id) + " out of range [0, " +
                            std::to_string(symbols_.size()) + ")");
  }
  return symbols_[static_cast<std::size_t>(id)];
}

int Vocabulary::id_of(std::string_view symbol) const {
  auto it = ids_.find(std::string(symbol));
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view symbol) const {
  return ids_.contains(std::string(symbol));
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id_of(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (int id : ids) tokens.push_back(symbol(id));
  return tokens;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  for (const auto& s : symbols_) out << s << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<std::string> symbols;
  std::string line;
  while (std::getline(in, line)) symbols.push_back(line);
  return Vocabulary(std::move(symbols));
}

Vocabulary build_vocab(const Corpus& corpus, std::size_t max_size) {
  if (max_size < 1) throw ConfigError("max vocabulary size must be at least 1");
  if (corpus.empty()) throw CorpusError("empty corpus");
  struct Entry {
    std::size_t count = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, Entry> counts;
  std::vector<std::string> order;
  for (const auto& s : corpus.sentences) {
    for (const auto& tok : linearize(s).tokens) {
      if (is_special_token(tok)) continue;
      auto [it, inserted] = counts.try_emplace(tok, Entry{0, order.size()});
      if (inserted) order.push_back(tok);
      ++it->second.count;
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    return counts[a].count > counts[b].count;
  });
  if (order.size() > max_size) order.resize(max_size);
  std::vector<std::string> symbols = special_symbols();
  symbols.insert(symbols.end(), order.begin(), order.end());
  return Vocabulary(std::move(symbols));
}

}  // namespace crossaug
