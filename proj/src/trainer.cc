#include "crossaug/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "crossaug/parallel.h"

namespace crossaug {

namespace {

constexpr std::uint64_t kEvalNoiseTag = 0xE7A1;

struct Side {
  Domain domain;
  double label;  // discriminator target for this domain's encodings
};
constexpr Side kSrcSide{Domain::kSource, 1.0};
constexpr Side kTgtSide{Domain::kTarget, 0.0};

std::vector<std::vector<int>> gather(const std::vector<std::vector<int>>& all,
                                     const std::vector<std::size_t>& idx) {
  std::vector<std::vector<int>> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

std::vector<std::vector<int>> noised(const std::vector<std::vector<int>>& clean,
                                     const NoiseConfig& noise, std::uint64_t seed,
                                     std::uint64_t stream, std::size_t first_index) {
  std::vector<std::vector<int>> out;
  out.reserve(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    Rng rng = sentence_rng(seed, stream, first_index + i);
    out.push_back(apply_noise(clean[i], noise, rng));
  }
  return out;
}

double mean_of(double sum, std::size_t n) { return n ? sum / static_cast<double>(n) : 0.0; }

std::string fmt(double v) {
  if (std::isnan(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Discriminator pass over fixed encodings: true labels, its own optimizer.
double discriminator_step(CrossDomainAutoencoder& model, RMSprop& opt, double clip,
                          const std::vector<std::pair<Array, double>>& pooled,
                          BatchStats& stats) {
  ad::Graph g;
  ModelGraph mg(model, g);
  ad::Var total;
  for (const auto& [value, label] : pooled) {
    const std::vector<double> labels(value.rows(), label);
    ad::Var l = loss_adv(model.discriminate(mg, g.constant(value)), labels);
    total = total.valid() ? ad::add(total, l) : l;
  }
  total = ad::scale(total, 1.0 / static_cast<double>(pooled.size()));
  const double value = total.item();
  g.backward(total);
  auto params = model.discriminator_parameters();
  clip_grad_norm(params, clip);
  stats.discriminator_norm_clipped = global_grad_norm(params);
  opt.step(params);
  return value;
}

void check_finite(const BatchStats& s) {
  if (std::isfinite(s.l_noise) && std::isfinite(s.l_trans) && std::isfinite(s.l_adv) &&
      std::isfinite(s.l_disc)) {
    return;
  }
  std::ostringstream msg;
  msg << "non-finite loss in phase " << s.phase << ", epoch " << s.epoch << ", batch " << s.batch
      << ": L_noise=" << s.l_noise << " L_trans=" << s.l_trans << " L_adv=" << s.l_adv
      << " L_disc=" << s.l_disc;
  throw TrainingError(msg.str());
}

PerplexityResult dev_denoise(CrossDomainAutoencoder& model, const TrainData& data,
                             const TrainConfig& cfg) {
  const std::uint64_t seed = derive_seed(cfg.seed, kEvalNoiseTag);
  PerplexityResult a = evaluate_perplexity(model, data.src.dev, Domain::kSource,
                                           PplMode::kDenoise, cfg.noise, seed, cfg.batch_size);
  PerplexityResult b = evaluate_perplexity(model, data.tgt.dev, Domain::kTarget,
                                           PplMode::kDenoise, cfg.noise, seed, cfg.batch_size);
  return {a.nll + b.nll, a.tokens + b.tokens};
}

PerplexityResult dev_detransform(CrossDomainAutoencoder& model, CrossDomainAutoencoder& snapshot,
                                 const TrainData& data, const TrainConfig& cfg) {
  PerplexityResult a = evaluate_perplexity(model, data.src.dev, Domain::kSource,
                                           PplMode::kDetransform, cfg.noise, 0, cfg.batch_size,
                                           &snapshot);
  PerplexityResult b = evaluate_perplexity(model, data.tgt.dev, Domain::kTarget,
                                           PplMode::kDetransform, cfg.noise, 0, cfg.batch_size,
                                           &snapshot);
  return {a.nll + b.nll, a.tokens + b.tokens};
}

void run_phase(int phase, TrainerState& state, const TrainData& data, const TrainConfig& cfg,
               const TrainHooks& hooks) {
  cfg.validate();
  if (!state.model.initialized()) throw ConfigError("trainer: model is not initialized");
  if (data.src.train.empty() || data.tgt.train.empty()) {
    throw ConfigError("trainer: both training corpora must be non-empty");
  }
  const LossWeights& w = phase == 1 ? cfg.phase1_weights : cfg.phase2_weights;
  const std::size_t epochs = phase == 1 ? cfg.phase1_epochs : cfg.phase2_epochs;
  Adam gen_opt(cfg.generator_lr);
  RMSprop disc_opt(cfg.discriminator_lr);
  CrossDomainAutoencoder& model = state.model;

  if (phase == 2) {
    model.copy_parameters_from(state.best);
    state.snapshot = model;
  }
  state.best = model;
  state.best_criterion = std::numeric_limits<double>::infinity();
  state.best_epoch = 0;
  state.phase = phase;
  state.epoch = 0;

  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    Rng pair_rng(derive_seed(cfg.seed, 0xBA7C, phase, epoch));
    const auto plans =
        pair_batches(data.src.train.size(), data.tgt.train.size(), cfg.batch_size, pair_rng);
    const std::uint64_t noise_seed = derive_seed(cfg.seed, cfg.noise.seed, phase, epoch);
    double sum_noise = 0, sum_trans = 0, sum_adv = 0;
    std::size_t position = 0;

    for (std::size_t bi = 0; bi < plans.size(); ++bi) {
      BatchStats stats;
      stats.phase = phase;
      stats.epoch = epoch;
      stats.batch = bi;
      const auto clean_src = gather(data.src.train, plans[bi].src);
      const auto clean_tgt = gather(data.tgt.train, plans[bi].tgt);
      const TokenBatch src_gold = TokenBatch::pack(clean_src);
      const TokenBatch tgt_gold = TokenBatch::pack(clean_tgt);
      const TokenBatch src_in = TokenBatch::pack(noised(clean_src, cfg.noise, noise_seed, 0, position));
      const TokenBatch tgt_in = TokenBatch::pack(noised(clean_tgt, cfg.noise, noise_seed, 1, position));
      position += clean_src.size();

      // Transformed views come from the frozen snapshot, outside any gradient path.
      TokenBatch src_as_tgt, tgt_as_src;
      if (phase == 2) {
        src_as_tgt = TokenBatch::pack(transform(state.snapshot, clean_src, Domain::kSource,
                                                cfg.batch_size));
        tgt_as_src = TokenBatch::pack(transform(state.snapshot, clean_tgt, Domain::kTarget,
                                                cfg.batch_size));
      }

      ad::Graph g;
      ModelGraph mg(model, g);
      Rng dropout_rng(derive_seed(cfg.seed, 0xD0, phase * 1000003ULL + epoch, bi));

      struct Encoded {
        LatentStates latent;
        Side side;  // domain the encoder read
      };
      std::vector<Encoded> encoded;
      encoded.push_back({model.encode(mg, Domain::kSource, src_in, &dropout_rng), kSrcSide});
      encoded.push_back({model.encode(mg, Domain::kTarget, tgt_in, &dropout_rng), kTgtSide});
      if (phase == 2) {
        encoded.push_back({model.encode(mg, Domain::kTarget, src_as_tgt, &dropout_rng), kTgtSide});
        encoded.push_back({model.encode(mg, Domain::kSource, tgt_as_src, &dropout_rng), kSrcSide});
      }

      // Discriminator first, on these encodings with true labels.
      std::vector<std::pair<Array, double>> pooled;
      for (const auto& e : encoded) pooled.emplace_back(e.latent.pooled.value(), e.side.label);
      stats.l_disc = discriminator_step(model, disc_opt, cfg.grad_clip, pooled, stats);

      // Encoder/decoder: reconstruction plus fooling the updated discriminator.
      ad::Var l_noise = ad::add(
          loss_noise(model.decode_teacher_forced(mg, Domain::kSource, encoded[0].latent, src_gold,
                                                 &dropout_rng).logp,
                     src_gold),
          loss_noise(model.decode_teacher_forced(mg, Domain::kTarget, encoded[1].latent, tgt_gold,
                                                 &dropout_rng).logp,
                     tgt_gold));
      ad::Var l_trans;
      if (phase == 2) {
        l_trans = ad::add(
            loss_trans(model.decode_teacher_forced(mg, Domain::kSource, encoded[2].latent,
                                                   src_gold, &dropout_rng).logp,
                       src_gold),
            loss_trans(model.decode_teacher_forced(mg, Domain::kTarget, encoded[3].latent,
                                                   tgt_gold, &dropout_rng).logp,
                       tgt_gold));
      }
      ad::Var l_adv;
      for (const auto& e : encoded) {
        const std::vector<double> flipped(e.latent.batch, 1.0 - e.side.label);
        ad::Var l = loss_adv(model.discriminate(mg, e.latent.pooled), flipped);
        l_adv = l_adv.valid() ? ad::add(l_adv, l) : l;
      }
      l_adv = ad::scale(l_adv, 1.0 / static_cast<double>(encoded.size()));
      ad::Var total = loss_final(l_noise, l_trans, l_adv, w);

      stats.l_noise = l_noise.item();
      stats.l_trans = l_trans.valid() ? l_trans.item() : 0.0;
      stats.l_adv = l_adv.item();
      check_finite(stats);

      g.backward(total);
      zero_grads(model.discriminator_parameters());
      auto gen = model.generator_parameters();
      stats.generator_norm = clip_grad_norm(gen, cfg.grad_clip);
      stats.generator_norm_clipped = global_grad_norm(gen);
      gen_opt.step(gen);
      stats.max_softmax_row_error = g.stats().max_softmax_row_error;

      sum_noise += stats.l_noise;
      sum_trans += stats.l_trans;
      sum_adv += stats.l_adv;
      if (hooks.on_batch) hooks.on_batch(stats);
    }

    EpochRecord rec;
    rec.phase = phase;
    rec.epoch = epoch;
    rec.l_noise = mean_of(sum_noise, plans.size());
    rec.l_trans = mean_of(sum_trans, plans.size());
    rec.l_adv = mean_of(sum_adv, plans.size());
    rec.dev_denoise_ppl = dev_denoise(model, data, cfg).perplexity();
    rec.criterion = rec.dev_denoise_ppl;
    if (phase == 2) {
      state.snapshot.copy_parameters_from(model);
      rec.dev_detransform_ppl = dev_detransform(model, state.snapshot, data, cfg).perplexity();
      rec.criterion += rec.dev_detransform_ppl;
    }
    if (!std::isfinite(rec.criterion)) {
      throw TrainingError("non-finite dev perplexity in phase " + std::to_string(phase) +
                          ", epoch " + std::to_string(epoch));
    }
    if (rec.criterion < state.best_criterion) {
      state.best_criterion = rec.criterion;
      state.best_epoch = epoch;
      state.best.copy_parameters_from(model);
      rec.improved = true;
    }
    state.epoch = epoch;
    state.log.push_back(rec);
    if (hooks.on_epoch && !hooks.on_epoch(rec)) break;
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(generator_lr >= 0) || !(discriminator_lr >= 0)) {
    throw ConfigError("learning rates must be non-negative");
  }
  if (!(grad_clip > 0)) throw ConfigError("grad_clip must be positive");
  if (!(dev_fraction > 0 && dev_fraction < 1)) throw ConfigError("dev_fraction must be in (0, 1)");
  if (max_vocab < 1) throw ConfigError("max_vocab must be at least 1");
  phase1_weights.validate();
  phase2_weights.validate();
  noise.validate();
}

Profile paper_profile() { return Profile{}; }

Profile desk_profile() {
  Profile p;
  p.model.embed_dim = 32;
  p.model.encoder_hidden = 64;
  p.model.decoder_hidden = 64;
  p.model.discriminator_hidden = 64;
  p.model.dropout_rate = 0.1;
  p.train.batch_size = 8;
  p.train.phase1_epochs = 10;
  p.train.phase2_epochs = 8;
  p.train.generator_lr = 5e-3;
  p.train.discriminator_lr = 5e-4;
  return p;
}

Profile profile_by_name(const std::string& name) {
  if (name == "paper") return paper_profile();
  if (name == "desk") return desk_profile();
  throw ConfigError("unknown profile '" + name + "' (expected paper or desk)");
}

TrainData prepare_data(const Corpus& src, const Corpus& tgt, const Corpus* src_dev,
                       const Corpus* tgt_dev, const TrainConfig& cfg) {
  cfg.validate();
  auto split = [&](const Corpus& c, const Corpus* dev, std::uint64_t side,
                   Corpus& train_out, Corpus& dev_out) {
    if (c.empty()) throw ConfigError("training corpus '" + c.domain_id + "' is empty");
    if (dev) {
      train_out = c;
      dev_out = *dev;
      return;
    }
    if (c.size() < 2) throw ConfigError("need at least 2 sentences to hold out a dev split");
    std::vector<std::size_t> order(c.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, 0xDE7, side));
    rng.shuffle(order);
    const auto n_dev = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(cfg.dev_fraction * static_cast<double>(c.size()))),
        1, c.size() - 1);
    std::vector<bool> is_dev(c.size(), false);
    for (std::size_t i = 0; i < n_dev; ++i) is_dev[order[i]] = true;
    train_out.domain_id = dev_out.domain_id = c.domain_id;
    for (std::size_t i = 0; i < c.size(); ++i) {
      (is_dev[i] ? dev_out : train_out).sentences.push_back(c.sentences[i]);
    }
  };
  auto encode_all = [](const Corpus& c, const Vocabulary& v) {
    std::vector<std::vector<int>> out;
    out.reserve(c.size());
    for (const auto& s : c.sentences) out.push_back(v.encode(linearize(s)));
    return out;
  };
  Corpus src_train, src_dev_c, tgt_train, tgt_dev_c;
  split(src, src_dev, 0, src_train, src_dev_c);
  split(tgt, tgt_dev, 1, tgt_train, tgt_dev_c);
  TrainData data;
  data.src_vocab = build_vocab(src_train, cfg.max_vocab);
  data.tgt_vocab = build_vocab(tgt_train, cfg.max_vocab);
  data.src = {encode_all(src_train, data.src_vocab), encode_all(src_dev_c, data.src_vocab)};
  data.tgt = {encode_all(tgt_train, data.tgt_vocab), encode_all(tgt_dev_c, data.tgt_vocab)};
  return data;
}

std::vector<BatchPlan> pair_batches(std::size_t n_src, std::size_t n_tgt, std::size_t batch_size,
                                    Rng& rng) {
  if (n_src == 0 || n_tgt == 0) throw ConfigError("pair_batches: empty corpus");
  if (batch_size == 0) throw ConfigError("pair_batches: batch_size must be at least 1");
  std::vector<std::size_t> src(n_src), tgt(n_tgt);
  std::iota(src.begin(), src.end(), std::size_t{0});
  std::iota(tgt.begin(), tgt.end(), std::size_t{0});
  rng.shuffle(src);
  rng.shuffle(tgt);
  const std::size_t total = std::max(n_src, n_tgt);
  std::vector<BatchPlan> plans;
  for (std::size_t start = 0; start < total; start += batch_size) {
    BatchPlan plan;
    for (std::size_t i = start; i < std::min(total, start + batch_size); ++i) {
      plan.src.push_back(src[i % n_src]);
      plan.tgt.push_back(tgt[i % n_tgt]);
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

std::string log_header() {
  return "phase\tepoch\tL_noise\tL_trans\tL_adv\tdev_denoise_ppl\tdev_detransform_ppl\tcriterion\tbest";
}

std::string log_line(const EpochRecord& r) {
  std::ostringstream out;
  out << r.phase << '\t' << r.epoch << '\t' << fmt(r.l_noise) << '\t' << fmt(r.l_trans) << '\t'
      << fmt(r.l_adv) << '\t' << fmt(r.dev_denoise_ppl) << '\t' << fmt(r.dev_detransform_ppl)
      << '\t' << fmt(r.criterion) << '\t' << (r.improved ? "*" : "");
  return out.str();
}

TrainerState::TrainerState(const ModelConfig& config)
    : model(config), snapshot(config), best(config) {}

TrainerState init_state(const ModelConfig& model_cfg, const TrainData& data,
                        const TrainConfig& cfg) {
  ModelConfig mc = model_cfg;
  mc.src_vocab = data.src_vocab.size();
  mc.tgt_vocab = data.tgt_vocab.size();
  TrainerState state(mc);
  state.model.initialize(cfg.seed, &data.src_vocab, &data.tgt_vocab);
  state.best = state.model;
  state.snapshot = state.model;
  return state;
}

void train_phase1(TrainerState& state, const TrainData& data, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
  run_phase(1, state, data, cfg, hooks);
}

void train_phase2(TrainerState& state, const TrainData& data, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
  run_phase(2, state, data, cfg, hooks);
}

double PerplexityResult::perplexity() const {
  if (tokens == 0) throw CorpusError("perplexity of an empty corpus");
  return std::exp(nll / static_cast<double>(tokens));
}

std::vector<std::vector<int>> transform(CrossDomainAutoencoder& model,
                                        const std::vector<std::vector<int>>& sentences,
                                        Domain from, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("transform: batch_size must be at least 1");
  const std::size_t chunks = (sentences.size() + batch_size - 1) / batch_size;
  std::vector<std::vector<int>> out(sentences.size());
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t lo = c * batch_size, hi = std::min(sentences.size(), lo + batch_size);
    std::vector<std::vector<int>> part(sentences.begin() + lo, sentences.begin() + hi);
    std::vector<std::size_t> limits;
    for (const auto& s : part) limits.push_back(s.size() > 1 ? s.size() - 1 : 1);
    ad::Graph g(false);
    ModelGraph mg(model, g);
    const LatentStates latent = model.encode(mg, from, TokenBatch::pack(part));
    const auto emitted = model.decode_greedy(mg, other(from), latent, limits);
    for (std::size_t i = 0; i < part.size(); ++i) {
      std::vector<int> seq{kBosId};
      for (int id : emitted[i]) {
        if (id == kEosId) break;
        seq.push_back(id);
      }
      // Keep room for <EOS> within the input length.
      if (seq.size() + 1 > part[i].size() && part[i].size() >= 2) seq.resize(part[i].size() - 1);
      seq.push_back(kEosId);
      out[lo + i] = std::move(seq);
    }
  });
  return out;
}

PerplexityResult evaluate_perplexity(CrossDomainAutoencoder& model,
                                     const std::vector<std::vector<int>>& sentences, Domain domain,
                                     PplMode mode, const NoiseConfig& noise, std::uint64_t seed,
                                     std::size_t batch_size, CrossDomainAutoencoder* transformer) {
  if (sentences.empty()) throw CorpusError("perplexity: empty corpus");
  if (batch_size == 0) throw ConfigError("perplexity: batch_size must be at least 1");
  std::vector<std::vector<int>> inputs;
  Domain input_domain = domain;
  if (mode == PplMode::kDenoise) {
    inputs = noised(sentences, noise, seed, static_cast<std::uint64_t>(domain), 0);
  } else {
    if (!transformer) throw ConfigError("perplexity: detransform mode needs a transformer model");
    inputs = transform(*transformer, sentences, domain, batch_size);
    input_domain = other(domain);
  }
  const std::size_t chunks = (sentences.size() + batch_size - 1) / batch_size;
  std::vector<PerplexityResult> parts(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t lo = c * batch_size, hi = std::min(sentences.size(), lo + batch_size);
    const TokenBatch in = TokenBatch::pack({inputs.begin() + lo, inputs.begin() + hi});
    const TokenBatch gold = TokenBatch::pack({sentences.begin() + lo, sentences.begin() + hi});
    ad::Graph g(false);
    ModelGraph mg(model, g);
    const LatentStates latent = model.encode(mg, input_domain, in);
    const DecodeOutput dec = model.decode_teacher_forced(mg, domain, latent, gold);
    std::vector<int> ids;
    std::vector<double> weights;
    target_rows(gold, ids, weights);
    std::size_t count = 0;
    for (double wt : weights) count += wt > 0 ? 1 : 0;
    parts[c] = {ad::nll(dec.logp, ids, weights, 1.0).item(), count};
  });
  PerplexityResult total;
  for (const auto& p : parts) {
    total.nll += p.nll;
    total.tokens += p.tokens;
  }
  return total;
}

}  // namespace crossaug
