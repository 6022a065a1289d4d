#include "crossaug/tagger.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "crossaug/checkpoint.h"
#include "crossaug/errors.h"
#include "crossaug/layers.h"
#include "crossaug/model.h"
#include "crossaug/optim.h"
#include "crossaug/parallel.h"

namespace crossaug {

namespace {

const char* const kParamNames[] = {"tagger.embed",      "tagger.fwd.weight", "tagger.fwd.bias",
                                   "tagger.bwd.weight", "tagger.bwd.bias",   "tagger.out.weight",
                                   "tagger.out.bias"};

std::vector<std::string> label_set(const EntityTypes& types) {
  std::vector<std::string> labels{"O"};
  for (const auto& t : types.names()) {
    labels.push_back("B-" + t);
    labels.push_back("I-" + t);
  }
  return labels;
}

Vocabulary word_vocab(const Corpus& train) {
  std::map<std::string, std::size_t> counts;
  std::vector<std::string> order;
  for (const auto& s : train.sentences) {
    for (const auto& w : s.words) {
      if (counts[w]++ == 0) order.push_back(w);
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](const std::string& a, const std::string& b) { return counts[a] > counts[b]; });
  Vocabulary base;
  std::vector<std::string> symbols = base.symbols();
  for (auto& w : order) {
    if (!base.contains(w)) symbols.push_back(std::move(w));
  }
  return Vocabulary(std::move(symbols));
}

std::set<std::tuple<std::size_t, std::size_t, std::size_t, std::string>> span_set(
    const Corpus& c) {
  std::set<std::tuple<std::size_t, std::size_t, std::size_t, std::string>> out;
  for (std::size_t k = 0; k < c.size(); ++k) {
    for (const auto& e : extract_entities(c.sentences[k])) {
      out.emplace(k, e.start, e.end, e.entity_type);
    }
  }
  return out;
}

double epoch_f1(const Tagger& t, const Corpus& dev) { return micro_f1(dev, t.tag_corpus(dev)).f1; }

}  // namespace

void TaggerConfig::validate() const {
  if (embed_dim < 1 || hidden_dim < 1) throw ConfigError("tagger dimensions must be at least 1");
  if (batch_size < 1) throw ConfigError("tagger batch_size must be at least 1");
  if (!(dropout >= 0 && dropout < 1)) throw ConfigError("tagger dropout must be in [0, 1)");
  if (!(lr >= 0)) throw ConfigError("tagger lr must be non-negative");
  if (!(grad_clip > 0)) throw ConfigError("tagger grad_clip must be positive");
  if (!(unk_replace >= 0 && unk_replace <= 1)) throw ConfigError("unk_replace must be in [0, 1]");
}

F1Report f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  F1Report r;
  r.true_positives = tp;
  r.false_positives = fp;
  r.false_negatives = fn;
  r.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

F1Report micro_f1(const Corpus& gold, const Corpus& predicted) {
  if (gold.size() != predicted.size()) {
    throw ConfigError("micro_f1: " + std::to_string(gold.size()) + " gold sentences vs " +
                      std::to_string(predicted.size()) + " predicted");
  }
  for (std::size_t k = 0; k < gold.size(); ++k) {
    if (gold.sentences[k].size() != predicted.sentences[k].size()) {
      throw ConfigError("micro_f1: sentence " + std::to_string(k) + " lengths differ");
    }
  }
  const auto g = span_set(gold);
  const auto p = span_set(predicted);
  std::size_t tp = 0;
  for (const auto& span : p) tp += g.count(span);
  return f1_from_counts(tp, p.size() - tp, g.size() - tp);
}

void repair_bio(std::vector<std::string>& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].rfind("I-", 0) != 0) continue;
    const std::string type = labels[i].substr(2);
    const bool continues = i > 0 && (labels[i - 1] == "B-" + type || labels[i - 1] == "I-" + type);
    if (!continues) labels[i] = "B-" + type;
  }
}

Tagger::Tagger(const TaggerConfig& cfg, Vocabulary words, const EntityTypes& types)
    : cfg_(cfg), words_(std::move(words)), labels_(label_set(types)) {
  cfg_.validate();
  const std::size_t e = cfg.embed_dim, h = cfg.hidden_dim, l = labels_.size();
  const std::pair<std::size_t, std::size_t> shapes[kNumParams] = {
      {words_.size(), e}, {e + h, 4 * h}, {1, 4 * h}, {e + h, 4 * h}, {1, 4 * h}, {2 * h, l}, {1, l}};
  Rng rng(derive_seed(cfg.seed, 0x7A6));
  for (std::size_t i = 0; i < kNumParams; ++i) {
    Array a(shapes[i].first, shapes[i].second);
    if (i == kFwdB || i == kBwdB) {
      for (std::size_t j = h; j < 2 * h; ++j) a[j] = 1.0;
    } else if (i != kOutB) {
      for (double& v : a.values()) v = rng.uniform(-0.1, 0.1);
    }
    params_.emplace_back(kParamNames[i], std::move(a));
  }
}

int Tagger::label_id(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  return it == labels_.end() ? -1 : static_cast<int>(it - labels_.begin());
}

std::vector<ad::Parameter*> Tagger::parameter_ptrs() {
  std::vector<ad::Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

ad::Var Tagger::forward(ad::Graph& g, const std::vector<std::vector<int>>& ids, std::size_t steps,
                        Rng* dropout_rng) const {
  const std::size_t batch = ids.size(), h = cfg_.hidden_dim;
  // Parameters are only read here; the graph accumulates into their grads.
  auto& self = const_cast<Tagger&>(*this);
  std::vector<ad::Var> p;
  for (auto& param : self.params_) p.push_back(g.parameter(param));

  std::vector<ad::Var> x(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<int> col(batch);
    for (std::size_t b = 0; b < batch; ++b) col[b] = t < ids[b].size() ? ids[b][t] : kPadId;
    x[t] = ad::gather_rows(p[kEmbed], col);
    if (dropout_rng) x[t] = ad::dropout(x[t], cfg_.dropout, *dropout_rng);
  }
  const Array zeros(batch, h, 0.0);
  std::vector<ad::Var> fwd(steps), bwd(steps);
  LstmState s{g.constant(zeros), g.constant(zeros)};
  for (std::size_t t = 0; t < steps; ++t) {
    s = lstm_cell(x[t], s, p[kFwdW], p[kFwdB], h);
    fwd[t] = s.h;
  }
  s = {g.constant(zeros), g.constant(zeros)};
  for (std::size_t t = steps; t-- > 0;) {
    LstmState next = lstm_cell(x[t], s, p[kBwdW], p[kBwdB], h);
    std::vector<double> live(batch);
    for (std::size_t b = 0; b < batch; ++b) live[b] = t < ids[b].size() ? 1.0 : 0.0;
    s = {ad::row_blend(live, next.h, s.h), ad::row_blend(live, next.c, s.c)};
    bwd[t] = s.h;
  }
  std::vector<ad::Var> joined(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    joined[t] = ad::concat_cols({fwd[t], bwd[t]});
    if (dropout_rng) joined[t] = ad::dropout(joined[t], cfg_.dropout, *dropout_rng);
  }
  ad::Var logits = ad::add_row(ad::matmul(ad::stack_steps(joined), p[kOutW]), p[kOutB]);
  return ad::log_softmax_rows(logits);
}

std::vector<std::string> Tagger::tag(const std::vector<std::string>& words) const {
  if (words.empty()) return {};
  Corpus c;
  c.sentences.push_back({words, std::vector<std::string>(words.size(), "O")});
  return tag_corpus(c).sentences.front().labels;
}

Corpus Tagger::tag_corpus(const Corpus& corpus) const {
  Corpus out;
  out.domain_id = corpus.domain_id;
  out.sentences.resize(corpus.size());
  for (std::size_t lo = 0; lo < corpus.size(); lo += cfg_.batch_size) {
    const std::size_t hi = std::min(corpus.size(), lo + cfg_.batch_size);
    std::vector<std::vector<int>> ids;
    std::size_t steps = 0;
    for (std::size_t k = lo; k < hi; ++k) {
      ids.push_back(words_.encode(corpus.sentences[k].words));
      steps = std::max(steps, ids.back().size());
    }
    if (steps == 0) continue;
    ad::Graph g(false);
    const Array& logp = forward(g, ids, steps, nullptr).value();
    for (std::size_t k = lo; k < hi; ++k) {
      const std::size_t b = k - lo;
      LabeledSentence s;
      s.words = corpus.sentences[k].words;
      for (std::size_t t = 0; t < s.words.size(); ++t) {
        auto row = logp.row(b * steps + t);
        const auto best = std::max_element(row.begin(), row.end()) - row.begin();
        s.labels.push_back(labels_[static_cast<std::size_t>(best)]);
      }
      repair_bio(s.labels);
      out.sentences[k] = std::move(s);
    }
  }
  return out;
}

void Tagger::save(const std::string& path) const {
  std::vector<const ad::Parameter*> ps;
  for (const auto& p : params_) ps.push_back(&p);
  save_parameters(path, ps);
  words_.save(path + ".words");
  std::ofstream out(path + ".labels");
  if (!out) throw CheckpointError("cannot write " + path + ".labels");
  for (const auto& l : labels_) out << l << '\n';
}

Tagger Tagger::load(const std::string& path, const TaggerConfig& cfg) {
  std::ifstream in(path + ".labels");
  if (!in) throw CheckpointError("cannot open " + path + ".labels");
  std::vector<std::string> types;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("B-", 0) == 0) types.push_back(line.substr(2));
  }
  Tagger t(cfg, Vocabulary::load(path + ".words"), EntityTypes(types));
  load_parameters(path, t.parameter_ptrs());
  return t;
}

Tagger train_tagger(const Corpus& train, const TaggerConfig& cfg, const EntityTypes& types,
                    const Corpus* dev) {
  cfg.validate();
  if (train.empty()) throw ConfigError("train_tagger: empty training corpus");
  Tagger tagger(cfg, word_vocab(train), types);
  std::vector<std::vector<int>> words, labels;
  std::map<int, std::size_t> counts;
  for (std::size_t k = 0; k < train.size(); ++k) {
    const auto& s = train.sentences[k];
    std::vector<int> ls;
    for (const auto& l : s.labels) {
      const int id = tagger.label_id(l);
      if (id < 0) {
        throw ValidationError(k, "label '" + l + "' is not a registered entity type");
      }
      ls.push_back(id);
    }
    words.push_back(tagger.words().encode(s.words));
    for (int w : words.back()) ++counts[w];
    labels.push_back(std::move(ls));
  }

  Adam opt(cfg.lr);
  auto params = tagger.parameter_ptrs();
  Tagger best = tagger;
  double best_f1 = -1.0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, 0x7A9, epoch));
    rng.shuffle(order);
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      std::vector<std::vector<int>> ids;
      std::size_t steps = 0;
      for (std::size_t i = lo; i < hi; ++i) {
        std::vector<int> w = words[order[i]];
        for (int& id : w) {
          if (counts[id] == 1 && rng.bernoulli(cfg.unk_replace)) id = kUnkId;
        }
        steps = std::max(steps, w.size());
        ids.push_back(std::move(w));
      }
      std::vector<int> targets(ids.size() * steps, 0);
      std::vector<double> weights(ids.size() * steps, 0.0);
      double count = 0;
      for (std::size_t b = 0; b < ids.size(); ++b) {
        const auto& ls = labels[order[lo + b]];
        for (std::size_t t = 0; t < ls.size(); ++t) {
          targets[b * steps + t] = ls[t];
          weights[b * steps + t] = 1.0;
          count += 1;
        }
      }
      ad::Graph g;
      ad::Var logp = tagger.forward(g, ids, steps, &rng);
      ad::Var loss = ad::nll(logp, targets, weights, std::max(count, 1.0));
      if (!std::isfinite(loss.item())) {
        throw ad::NonFiniteError("tagger: non-finite loss in epoch " + std::to_string(epoch));
      }
      g.backward(loss);
      clip_grad_norm(params, cfg.grad_clip);
      opt.step(params);
    }
    if (dev) {
      const double f1 = epoch_f1(tagger, *dev);
      if (f1 > best_f1) {
        best_f1 = f1;
        best = tagger;
      }
    }
  }
  return dev ? best : tagger;
}

std::string ExperimentResult::table() const {
  std::ostringstream out;
  out << "condition\ttrain_size\tprecision\trecall\tf1\tgain\n";
  auto row = [&](const ExperimentArm& a) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s\t%zu\t%.2f\t%.2f\t%.2f\t%+.2f\n", a.condition.c_str(),
                  a.train_size, 100 * a.test.precision, 100 * a.test.recall, 100 * a.test.f1,
                  100 * (a.test.f1 - source.test.f1));
    out << buf;
  };
  row(source);
  row(gen);
  row(target);
  return out.str();
}

ExperimentResult run_experiment(const Corpus& src, const Corpus& tgt_train, const Corpus& gen,
                                const Corpus& tgt_dev, const Corpus& tgt_test,
                                const TaggerConfig& cfg, const EntityTypes& types) {
  Corpus combined = src;
  combined.sentences.insert(combined.sentences.end(), gen.sentences.begin(), gen.sentences.end());
  const Corpus* train[3] = {&src, &combined, &tgt_train};
  const char* names[3] = {"Source", "Source+Gen", "Target"};
  ExperimentArm arms[3];
  parallel_for(3, [&](std::size_t i) {
    const Tagger t = train_tagger(*train[i], cfg, types, &tgt_dev);
    arms[i] = {names[i], train[i]->size(), micro_f1(tgt_test, t.tag_corpus(tgt_test))};
  });
  return {arms[0], arms[1], arms[2]};
}

}  // namespace crossaug
