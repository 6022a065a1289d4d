#include "crossaug/synthcorpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "crossaug/errors.h"
#include "crossaug/rng.h"

namespace crossaug {

namespace {

// Fixed frames rather than free word choices: words that fill the same slot
// in identical contexts cannot be told apart without parallel data, so every
// context word gets its own frame position.
const char* const kTemplates[] = {
    "<PERSON> said that <ORG> will open an office in <GPE> .",
    "The minister of <GPE> met <PERSON> on Monday .",
    "<ORG> reported profits of <CARDINAL> million dollars this year .",
    "Analysts in <GPE> expect <CARDINAL> new jobs .",
    "<PERSON> joined <ORG> after <CARDINAL> years as chief executive .",
    "According to <PERSON> , the government plans to hire <CARDINAL> workers .",
    "Yesterday <PERSON> travelled from <GPE> to <GPE> .",
    "The agreement between <ORG> and <ORG> was signed in <GPE> .",
    "Police in <GPE> arrested <CARDINAL> suspects after the protest .",
    "<PERSON> believes the economy of <GPE> remains extremely strong .",
    "Tomorrow <PERSON> will speak at the <ORG> conference .",
    "<CARDINAL> students protested at the <ORG> headquarters .",
    "I really enjoyed the interview by <PERSON> about <GPE> .",
    "Please contact <PERSON> before the meeting tonight .",
    "<ORG> denied reports that <PERSON> had resigned .",
    "The weather in <GPE> was terrible today , said <PERSON> .",
    "You should read what <PERSON> wrote about <ORG> .",
    "Nobody in <GPE> remembers why <PERSON> lost the election .",
    "<GPE> will host <CARDINAL> athletes next summer .",
    "Shares of <ORG> fell sharply on Friday .",
    "<PERSON> and <PERSON> announced their engagement last night .",
    "Residents of <GPE> complained about noise from the <ORG> factory .",
    "We cannot believe <ORG> fired <CARDINAL> employees without warning .",
    "Everyone loved the new album by <PERSON> .",
};

const char* const kPersons[] = {
    "John Smith",     "Mary Jones",    "Ahmed Khan",     "Li Wei",         "Maria Garcia",
    "David Brown",    "Sarah Miller",  "James Wilson",   "Anna Novak",     "Peter Clark",
    "Laura Lopez",    "Kenji Tanaka",  "Olga Petrova",   "Carlos Silva",   "Emma Davis",
    "Tom Baker",      "Nina Patel",    "Paul Martin",    "Grace Kim",      "Omar Haddad",
    "Smith",          "Jones",         "Garcia",         "Tanaka",         "Wilson",
};
const char* const kPlaces[] = {
    "Paris",    "London",   "New York", "Tokyo",     "Berlin",   "Cairo",   "Madrid",
    "Toronto",  "Mumbai",   "Sydney",   "Hong Kong", "Chicago",  "Moscow",  "Lagos",
    "Lima",     "Oslo",     "Texas",    "Ohio",      "Kenya",    "Brazil",  "South Korea",
};
const char* const kOrgs[] = {
    "Acme Corp",        "Globex",           "United Nations",  "Reuters",
    "Apex Bank",        "Red Cross",        "Boeing",          "Vertex Labs",
    "City Council",     "Northwind Traders", "Blue Sky Airlines", "Initech",
    "Harbor University", "Pinnacle Group",  "Summit Energy",   "Orion Media",
};
const char* const kNumbers[] = {
    "two",  "three", "five", "seven", "ten", "twelve", "20",  "35",  "40", "50",
    "100",  "150",   "200",  "300",   "450", "600",    "800", "1,000", "12", "eight",
};

// Shortenings used before the generic rules.
const std::pair<const char*, const char*> kSlang[] = {
    {"you", "u"},          {"You", "u"},         {"people", "ppl"},    {"tomorrow", "tmrw"},
    {"Tomorrow", "tmrw"},  {"tonight", "2nite"}, {"Tonight", "2nite"}, {"please", "pls"},
    {"Please", "pls"},     {"really", "rly"},    {"government", "govt"}, {"company", "co"},
    {"years", "yrs"},      {"million", "mil"},   {"yesterday", "yday"}, {"Yesterday", "yday"},
    {"before", "b4"},      {"to", "2"},          {"and", "&"},         {"about", "abt"},
    {"According", "acc"},  {"should", "shld"},   {"what", "wat"},      {"Today", "2day"},
    {"today", "2day"},     {"I", "i"},           {"very", "v"},        {"extremely", "xtremely"},
    {"that", "dat"},       {"the", "da"},        {"The", "da"},        {"Everyone", "every1"},
};

bool is_punct(const std::string& w) {
  return std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::ispunct(c); });
}

std::string drop_vowels(const std::string& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(w[i])));
    const bool vowel = std::string_view("aeiou").find(c) != std::string_view::npos;
    if (i == 0 || !vowel) out.push_back(c);
  }
  return out;
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

// Template tokens: literal words, slots and alternative groups.
struct Piece {
  enum Kind { kWord, kSlot, kChoice } kind;
  std::string text;                  // word or slot type
  std::vector<std::string> options;  // for kChoice, each may hold several words
};

std::vector<Piece> parse_template(const std::string& t) {
  std::vector<Piece> pieces;
  std::size_t i = 0;
  while (i < t.size()) {
    if (t[i] == ' ') {
      ++i;
    } else if (t[i] == '(') {
      const auto close = t.find(')', i);
      if (close == std::string::npos) throw ConfigError("template: unclosed '(' in '" + t + "'");
      Piece p{Piece::kChoice, {}, {}};
      std::string body = t.substr(i + 1, close - i - 1);
      std::size_t start = 0;
      for (std::size_t k = 0; k <= body.size(); ++k) {
        if (k == body.size() || body[k] == '|') {
          p.options.push_back(body.substr(start, k - start));
          start = k + 1;
        }
      }
      pieces.push_back(std::move(p));
      i = close + 1;
    } else if (t[i] == '<') {
      const auto close = t.find('>', i);
      if (close == std::string::npos) throw ConfigError("template: unclosed '<' in '" + t + "'");
      pieces.push_back({Piece::kSlot, t.substr(i + 1, close - i - 1), {}});
      i = close + 1;
    } else {
      const auto end = t.find(' ', i);
      const std::size_t stop = end == std::string::npos ? t.size() : end;
      pieces.push_back({Piece::kWord, t.substr(i, stop - i), {}});
      i = stop;
    }
  }
  return pieces;
}

struct Grammar {
  std::vector<std::vector<Piece>> templates;
  std::map<std::string, std::vector<std::string>> seen, novel;
};

LabeledSentence sample_sentence(const Grammar& g, double novel_rate, Rng& rng) {
  const auto& pieces = g.templates[rng.below(g.templates.size())];
  LabeledSentence s;
  for (const auto& p : pieces) {
    if (p.kind == Piece::kSlot) {
      const auto& novel = g.novel.at(p.text);
      const bool use_novel = !novel.empty() && rng.bernoulli(novel_rate);
      const auto& pool = use_novel ? novel : g.seen.at(p.text);
      const auto words = split_words(pool[rng.below(pool.size())]);
      for (std::size_t k = 0; k < words.size(); ++k) {
        s.words.push_back(words[k]);
        s.labels.push_back((k == 0 ? "B-" : "I-") + p.text);
      }
      continue;
    }
    const std::string& text = p.kind == Piece::kWord ? p.text : p.options[rng.below(p.options.size())];
    for (auto& w : split_words(text)) {
      s.words.push_back(std::move(w));
      s.labels.push_back("O");
    }
  }
  return s;
}

Corpus sample_corpus(const Grammar& g, std::size_t n, double novel_rate, const StyleMap* style,
                     std::uint64_t seed, std::string domain_id) {
  Corpus c;
  c.domain_id = std::move(domain_id);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    LabeledSentence s = sample_sentence(g, novel_rate, rng);
    c.sentences.push_back(style ? style->apply(s) : std::move(s));
  }
  return c;
}

}  // namespace

StyleMap::StyleMap(std::vector<std::pair<std::string, std::string>> pairs,
                   const std::vector<std::string>& vocabulary)
    : pairs_(std::move(pairs)) {
  for (const auto& [from, to] : pairs_) {
    if (!lookup_.emplace(from, to).second) throw ConfigError("style map: '" + from + "' mapped twice");
  }
  std::set<std::string> images;
  std::set<std::string> words(vocabulary.begin(), vocabulary.end());
  for (const auto& [from, to] : pairs_) words.insert(from);
  for (const auto& w : words) {
    if (!images.insert(apply(w)).second) {
      throw ConfigError("style map is not injective: two words map to '" + apply(w) + "'");
    }
  }
}

const std::string& StyleMap::apply(const std::string& word) const {
  auto it = lookup_.find(word);
  return it == lookup_.end() ? word : it->second;
}

LabeledSentence StyleMap::apply(const LabeledSentence& s) const {
  LabeledSentence out = s;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.labels[i] == "O") out.words[i] = apply(out.words[i]);
  }
  return out;
}

void StyleMap::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  for (const auto& [from, to] : pairs_) out << from << '\t' << to << '\n';
}

void SynthSpec::validate() const {
  if (templates.empty()) throw ConfigError("synth: no templates");
  if (train_size == 0) throw ConfigError("synth: train_size must be at least 1");
  if (!(style_rate >= 0 && style_rate <= 1) || !(novel_rate >= 0 && novel_rate <= 1) ||
      !(novel_share >= 0 && novel_share < 1)) {
    throw ConfigError("synth: rates must be in [0, 1]");
  }
  for (const auto& t : templates) {
    for (const auto& p : parse_template(t)) {
      if (p.kind != Piece::kSlot) continue;
      auto it = lexicons.find(p.text);
      if (it == lexicons.end() || it->second.empty()) {
        throw ConfigError("synth: empty lexicon for entity type " + p.text);
      }
    }
  }
}

SynthSpec SynthSpec::defaults() {
  SynthSpec s;
  s.templates.assign(std::begin(kTemplates), std::end(kTemplates));
  s.lexicons["PERSON"].assign(std::begin(kPersons), std::end(kPersons));
  s.lexicons["GPE"].assign(std::begin(kPlaces), std::end(kPlaces));
  s.lexicons["ORG"].assign(std::begin(kOrgs), std::end(kOrgs));
  s.lexicons["CARDINAL"].assign(std::begin(kNumbers), std::end(kNumbers));
  return s;
}

SynthSpec SynthSpec::fixture() {
  SynthSpec s = defaults();
  s.train_size = 32;
  s.dev_size = 0;
  s.test_size = 0;
  s.seed = 2024;
  return s;
}

SynthPair generate_pair(const SynthSpec& spec) {
  spec.validate();
  Grammar g;
  std::set<std::string> context;
  std::vector<std::string> context_order;  // first-seen order keeps the map stable
  for (const auto& t : spec.templates) {
    g.templates.push_back(parse_template(t));
    for (const auto& p : g.templates.back()) {
      std::vector<std::string> texts;
      if (p.kind == Piece::kWord) texts.push_back(p.text);
      if (p.kind == Piece::kChoice) texts = p.options;
      for (const auto& text : texts) {
        for (const auto& w : split_words(text)) {
          if (context.insert(w).second) context_order.push_back(w);
        }
      }
    }
  }
  std::vector<std::string> type_names;
  std::set<std::string> entity_words;
  for (const auto& [type, names] : spec.lexicons) {
    type_names.push_back(type);
    std::vector<std::string> pool = names;
    Rng rng(derive_seed(spec.seed, 4, hash_string(type)));
    rng.shuffle(pool);
    const auto n_novel = static_cast<std::size_t>(spec.novel_share * static_cast<double>(pool.size()));
    g.novel[type].assign(pool.end() - static_cast<std::ptrdiff_t>(n_novel), pool.end());
    g.seen[type].assign(pool.begin(), pool.end() - static_cast<std::ptrdiff_t>(n_novel));
    for (const auto& n : names) {
      for (const auto& w : split_words(n)) entity_words.insert(w);
    }
  }

  // Pick which context words change, then give each a noisy form that no
  // other word already uses.
  std::vector<std::pair<std::string, std::string>> pairs;
  std::set<std::string> taken(context.begin(), context.end());
  taken.insert(entity_words.begin(), entity_words.end());
  Rng style_rng(derive_seed(spec.seed, 3));
  for (const auto& w : context_order) {
    const bool chosen = style_rng.bernoulli(spec.style_rate);
    if (!chosen || is_punct(w)) continue;
    std::string form;
    for (const auto& [from, to] : kSlang) {
      if (w == from) form = to;
    }
    if (form.empty() || taken.count(form)) form = drop_vowels(w);
    if (form == w || taken.count(form)) {
      std::string lower = w;
      for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      form = lower != w && !taken.count(lower) ? lower : lower + "z";
    }
    while (taken.count(form)) form += "z";
    taken.insert(form);
    pairs.emplace_back(w, form);
  }
  std::vector<std::string> vocabulary(context_order.begin(), context_order.end());
  vocabulary.insert(vocabulary.end(), entity_words.begin(), entity_words.end());

  SynthPair out;
  out.style = StyleMap(std::move(pairs), vocabulary);
  out.types = EntityTypes(type_names);
  const auto seed = [&](std::uint64_t side, std::uint64_t split) {
    return derive_seed(spec.seed, side, split);
  };
  out.formal_train = sample_corpus(g, spec.train_size, 0.0, nullptr, seed(1, 0), "formal");
  out.formal_dev = sample_corpus(g, spec.dev_size, 0.0, nullptr, seed(1, 1), "formal");
  out.formal_test = sample_corpus(g, spec.test_size, 0.0, nullptr, seed(1, 2), "formal");
  out.noisy_train = sample_corpus(g, spec.train_size, 0.0, &out.style, seed(2, 0), "noisy");
  out.noisy_dev = sample_corpus(g, spec.dev_size, spec.novel_rate, &out.style, seed(2, 1), "noisy");
  out.noisy_test =
      sample_corpus(g, spec.test_size, spec.novel_rate, &out.style, seed(2, 2), "noisy");
  return out;
}

TokenAccuracy token_accuracy(const std::vector<LinearSequence>& hypotheses,
                             const std::vector<LinearSequence>& references) {
  if (hypotheses.size() != references.size()) {
    throw ConfigError("token_accuracy: " + std::to_string(hypotheses.size()) + " hypotheses for " +
                      std::to_string(references.size()) + " references");
  }
  TokenAccuracy acc;
  for (std::size_t k = 0; k < references.size(); ++k) {
    const auto& ref = references[k].tokens;
    const auto& hyp = hypotheses[k].tokens;
    if (ref.size() < 2) continue;
    for (std::size_t i = 1; i + 1 < ref.size(); ++i) {
      acc.total += 1;
      if (i + 1 < hyp.size() && hyp[i] == ref[i]) acc.correct += 1;
    }
  }
  return acc;
}

}  // namespace crossaug
