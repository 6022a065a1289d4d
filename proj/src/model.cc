#include "crossaug/model.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "crossaug/checkpoint.h"
#include "crossaug/layers.h"

namespace crossaug {

namespace {

constexpr double kInitScale = 0.1;
constexpr double kMaskedScore = -1e9;

const char* const kParamNames[CrossDomainAutoencoder::kNumParams] = {
    "embed.src",          "embed.tgt",          "encoder.fwd.weight", "encoder.fwd.bias",
    "encoder.bwd.weight", "encoder.bwd.bias",   "decoder.init.weight", "decoder.init.bias",
    "attention.query",    "attention.key",      "attention.score",    "decoder.cell.weight",
    "decoder.cell.bias",  "decoder.out.weight", "decoder.out.bias",   "project.src.weight",
    "project.src.bias",   "project.tgt.weight", "project.tgt.bias",   "discriminator.hidden.weight",
    "discriminator.hidden.bias", "discriminator.out.weight", "discriminator.out.bias"};

using P = CrossDomainAutoencoder;

std::size_t embed_id(Domain d) { return d == Domain::kSource ? P::kEmbedSrc : P::kEmbedTgt; }
std::size_t proj_w_id(Domain d) { return d == Domain::kSource ? P::kProjSrcW : P::kProjTgtW; }
std::size_t proj_b_id(Domain d) { return d == Domain::kSource ? P::kProjSrcB : P::kProjTgtB; }

void fill_uniform(Array& a, Rng& rng) {
  for (double& v : a.values()) v = rng.uniform(-kInitScale, kInitScale);
}

}  // namespace

const char* domain_name(Domain d) { return d == Domain::kSource ? "src" : "tgt"; }

void ModelConfig::validate() const {
  if (embed_dim < 1 || encoder_hidden < 1 || decoder_hidden < 1 || discriminator_hidden < 1) {
    throw ConfigError("model dimensions must be at least 1");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate must be in [0, 1)");
  }
  if (src_vocab <= kNumSpecials || tgt_vocab <= kNumSpecials) {
    throw ConfigError("vocabulary sizes must exceed the special symbols");
  }
}

std::string ModelConfig::to_manifest() const {
  std::ostringstream out;
  out.precision(17);
  out << "embed_dim=" << embed_dim << '\n'
      << "encoder_hidden=" << encoder_hidden << '\n'
      << "decoder_hidden=" << decoder_hidden << '\n'
      << "discriminator_hidden=" << discriminator_hidden << '\n'
      << "dropout_rate=" << dropout_rate << '\n'
      << "src_vocab=" << src_vocab << '\n'
      << "tgt_vocab=" << tgt_vocab << '\n';
  return out.str();
}

ModelConfig ModelConfig::from_manifest(const std::string& text) {
  ModelConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("bad manifest line '" + line + "'");
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    try {
      if (key == "embed_dim") c.embed_dim = std::stoul(value);
      else if (key == "encoder_hidden") c.encoder_hidden = std::stoul(value);
      else if (key == "decoder_hidden") c.decoder_hidden = std::stoul(value);
      else if (key == "discriminator_hidden") c.discriminator_hidden = std::stoul(value);
      else if (key == "dropout_rate") c.dropout_rate = std::stod(value);
      else if (key == "src_vocab") c.src_vocab = std::stoul(value);
      else if (key == "tgt_vocab") c.tgt_vocab = std::stoul(value);
      else throw ConfigError("unknown manifest key '" + key + "'");
    } catch (const std::logic_error&) {
      throw ConfigError("bad manifest value for '" + key + "'");
    }
  }
  c.validate();
  return c;
}

void LossWeights::validate() const {
  if (noise < 0 || trans < 0 || adv < 0) throw ConfigError("loss weights must be non-negative");
}

TokenBatch TokenBatch::pack(const std::vector<std::vector<int>>& sequences) {
  TokenBatch tb;
  tb.batch = sequences.size();
  for (const auto& s : sequences) tb.steps = std::max(tb.steps, s.size());
  tb.ids.assign(tb.batch * tb.steps, kPadId);
  for (std::size_t b = 0; b < tb.batch; ++b) {
    std::copy(sequences[b].begin(), sequences[b].end(), tb.ids.begin() + b * tb.steps);
    tb.lengths.push_back(sequences[b].size());
  }
  return tb;
}

std::vector<int> TokenBatch::column(std::size_t t) const {
  std::vector<int> col(batch);
  for (std::size_t b = 0; b < batch; ++b) col[b] = at(b, t);
  return col;
}

std::size_t TokenBatch::tokens() const {
  std::size_t n = 0;
  for (auto l : lengths) n += l;
  return n;
}

ModelGraph::ModelGraph(CrossDomainAutoencoder& model, ad::Graph& graph)
    : model_(model), graph_(graph), bound_(CrossDomainAutoencoder::kNumParams) {}

ad::Var ModelGraph::param(std::size_t id) {
  if (!bound_[id].valid()) bound_[id] = graph_.parameter(model_.parameter(id));
  return bound_[id];
}

CrossDomainAutoencoder::CrossDomainAutoencoder(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t e = config.embed_dim, he = config.encoder_hidden, hd = config.decoder_hidden;
  const std::size_t lat = config.latent_dim(), dh = config.discriminator_hidden;
  const std::size_t vs = config.src_vocab, vt = config.tgt_vocab;
  const std::pair<std::size_t, std::size_t> shapes[kNumParams] = {
      {vs, e},           {vt, e},     {e + he, 4 * he}, {1, 4 * he}, {e + he, 4 * he},
      {1, 4 * he},       {lat, hd},   {1, hd},          {hd, hd},    {lat, hd},
      {hd, 1},           {e + lat + hd, 4 * hd},        {1, 4 * hd}, {hd + lat, hd},
      {1, hd},           {hd, vs},    {1, vs},          {hd, vt},    {1, vt},
      {lat, dh},         {1, dh},     {dh, 1},          {1, 1}};
  params_.reserve(kNumParams);
  for (std::size_t i = 0; i < kNumParams; ++i) {
    params_.emplace_back(kParamNames[i], Array(shapes[i].first, shapes[i].second));
  }
}

void CrossDomainAutoencoder::initialize(std::uint64_t seed, const Vocabulary* src,
                                        const Vocabulary* tgt) {
  if (params_.empty()) throw ConfigError("model has no configuration");
  if ((src && src->size() != config_.src_vocab) || (tgt && tgt->size() != config_.tgt_vocab)) {
    throw ConfigError("vocabulary size does not match the model configuration");
  }
  Rng rng(derive_seed(seed, 0x5eed));
  for (std::size_t i = 0; i < kNumParams; ++i) {
    Array& v = params_[i].value;
    switch (i) {
      case kEmbedSrc:
      case kEmbedTgt:
      case kProjSrcW:
      case kProjTgtW:
        break;  // symbol-keyed below
      case kEncFwdB:
      case kEncBwdB:
      case kDecCellB: {
        v.fill(0.0);
        const std::size_t h = v.cols() / 4;
        for (std::size_t j = h; j < 2 * h; ++j) v[j] = 1.0;
        break;
      }
      case kDecInitB:
      case kDecOutB:
      case kProjSrcB:
      case kProjTgtB:
      case kDiscHiddenB:
      case kDiscOutB:
        v.fill(0.0);
        break;
      default:
        fill_uniform(v, rng);
    }
    params_[i].zero_grad();
  }
  auto keyed = [&](const Vocabulary* vocab, std::size_t row) -> std::uint64_t {
    return vocab ? hash_string(vocab->symbol(static_cast<int>(row))) : row;
  };
  for (Domain d : {Domain::kSource, Domain::kTarget}) {
    const Vocabulary* vocab = d == Domain::kSource ? src : tgt;
    Array& emb = params_[embed_id(d)].value;
    for (std::size_t r = 0; r < emb.rows(); ++r) {
      Rng row_rng(derive_seed(seed, 1, keyed(vocab, r)));
      for (double& x : emb.row(r)) x = row_rng.uniform(-kInitScale, kInitScale);
    }
    Array& proj = params_[proj_w_id(d)].value;
    for (std::size_t c = 0; c < proj.cols(); ++c) {
      Rng col_rng(derive_seed(seed, 2, keyed(vocab, c)));
      for (std::size_t r = 0; r < proj.rows(); ++r) {
        proj(r, c) = col_rng.uniform(-kInitScale, kInitScale);
      }
    }
  }
  initialized_ = true;
}

ad::Parameter& CrossDomainAutoencoder::parameter(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw ConfigError("no parameter named '" + std::string(name) + "'");
}

std::vector<ad::Parameter*> CrossDomainAutoencoder::generator_parameters() {
  std::vector<ad::Parameter*> out;
  for (std::size_t i = 0; i < kDiscHiddenW; ++i) out.push_back(&params_[i]);
  return out;
}

std::vector<ad::Parameter*> CrossDomainAutoencoder::discriminator_parameters() {
  std::vector<ad::Parameter*> out;
  for (std::size_t i = kDiscHiddenW; i < kNumParams; ++i) out.push_back(&params_[i]);
  return out;
}

std::vector<ad::Parameter*> CrossDomainAutoencoder::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<const ad::Parameter*> CrossDomainAutoencoder::parameters() const {
  std::vector<const ad::Parameter*> out;
  for (const auto& p : params_) out.push_back(&p);
  return out;
}

void CrossDomainAutoencoder::copy_parameters_from(const CrossDomainAutoencoder& other) {
  if (!(config_ == other.config_)) throw ConfigError("copying between different configurations");
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i].value = other.params_[i].value;
  initialized_ = other.initialized_;
}

void CrossDomainAutoencoder::save(const std::string& path) const {
  save_parameters(path, parameters());
  std::ofstream manifest(path + ".manifest", std::ios::binary);
  if (!manifest) throw CheckpointError("cannot write " + path + ".manifest");
  manifest << config_.to_manifest();
}

CrossDomainAutoencoder CrossDomainAutoencoder::load(const std::string& path) {
  std::ifstream manifest(path + ".manifest");
  if (!manifest) throw CheckpointError("cannot open " + path + ".manifest");
  std::stringstream text;
  text << manifest.rdbuf();
  CrossDomainAutoencoder model(ModelConfig::from_manifest(text.str()));
  load_parameters(path, model.parameters());
  model.initialized_ = true;
  return model;
}

CrossDomainAutoencoder::CellState CrossDomainAutoencoder::lstm_step(ModelGraph& mg, std::size_t w,
                                                                    std::size_t b, ad::Var input,
                                                                    CellState prev,
                                                                    std::size_t hidden) const {
  return lstm_cell(input, prev, mg.param(w), mg.param(b), hidden);
}

LatentStates CrossDomainAutoencoder::encode(ModelGraph& mg, Domain domain,
                                            const TokenBatch& input, Rng* dropout_rng) const {
  if (input.batch == 0 || input.steps == 0) throw ShapeError("encode: empty sequence");
  for (auto len : input.lengths) {
    if (len == 0) throw ShapeError("encode: empty sequence");
  }
  ad::Graph& g = mg.graph();
  const std::size_t batch = input.batch, steps = input.steps, he = config_.encoder_hidden;
  ad::Var table = mg.param(embed_id(domain));

  std::vector<ad::Var> embedded(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const std::vector<int> col = input.column(t);
    embedded[t] = ad::gather_rows(table, col);
    if (dropout_rng) embedded[t] = ad::dropout(embedded[t], config_.dropout_rate, *dropout_rng);
  }

  const Array zeros(batch, he, 0.0);
  std::vector<ad::Var> fwd(steps), bwd(steps);
  CellState state{g.constant(zeros), g.constant(zeros)};
  for (std::size_t t = 0; t < steps; ++t) {
    state = lstm_step(mg, kEncFwdW, kEncFwdB, embedded[t], state, he);
    fwd[t] = state.h;
  }
  // The backward pass starts at each row's last real token: on padding the
  // state is held at zero.
  state = {g.constant(zeros), g.constant(zeros)};
  for (std::size_t t = steps; t-- > 0;) {
    CellState next = lstm_step(mg, kEncBwdW, kEncBwdB, embedded[t], state, he);
    std::vector<double> live(batch);
    bool all_live = true;
    for (std::size_t b = 0; b < batch; ++b) {
      live[b] = t < input.lengths[b] ? 1.0 : 0.0;
      all_live = all_live && live[b] == 1.0;
    }
    if (!all_live) {
      next.h = ad::row_blend(live, next.h, state.h);
      next.c = ad::row_blend(live, next.c, state.c);
    }
    state = next;
    bwd[t] = state.h;
  }

  std::vector<ad::Var> joined(steps);
  for (std::size_t t = 0; t < steps; ++t) joined[t] = ad::concat_cols({fwd[t], bwd[t]});

  LatentStates latent;
  latent.batch = batch;
  latent.steps = steps;
  latent.lengths = input.lengths;
  latent.states = ad::stack_steps(joined);
  Array pool(batch, steps, 0.0);
  latent.attention_mask = Array(batch, steps, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const double w = 1.0 / static_cast<double>(input.lengths[b]);
    for (std::size_t t = 0; t < steps; ++t) {
      if (t < input.lengths[b]) {
        pool(b, t) = w;
      } else {
        latent.attention_mask(b, t) = kMaskedScore;
      }
    }
  }
  latent.pooled = ad::weighted_rows(g.constant(std::move(pool)), latent.states);
  return latent;
}

namespace {

struct AttentionStep {
  ad::Var context;
  ad::Var weights;
};

AttentionStep attend(ModelGraph& mg, const LatentStates& latent, ad::Var keys, ad::Var query_h) {
  ad::Var query = ad::matmul(query_h, mg.param(P::kAttQuery));
  ad::Var hidden = ad::tanh(ad::add(keys, ad::repeat_rows(query, latent.steps)));
  ad::Var scores =
      ad::reshape(ad::matmul(hidden, mg.param(P::kAttScore)), latent.batch, latent.steps);
  ad::Var alpha = ad::softmax_rows(scores, &latent.attention_mask);
  return {ad::weighted_rows(alpha, latent.states), alpha};
}

}  // namespace

DecodeOutput CrossDomainAutoencoder::decode_teacher_forced(ModelGraph& mg, Domain domain,
                                                           const LatentStates& latent,
                                                           const TokenBatch& target,
                                                           Rng* dropout_rng,
                                                           bool keep_attention) const {
  if (target.batch != latent.batch) {
    throw ShapeError("decode: " + std::to_string(target.batch) + " targets for " +
                     std::to_string(latent.batch) + " encoded sentences");
  }
  if (target.steps < 2) throw ShapeError("decode: target needs at least 2 tokens");
  for (std::size_t b = 0; b < target.batch; ++b) {
    if (target.at(b, 0) != kBosId) throw ShapeError("decode: target must begin with <BOS>");
  }
  const std::size_t vocab = vocab_size(domain);
  for (int id : target.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw ShapeError("decode: id " + std::to_string(id) + " outside the " + domain_name(domain) +
                       " vocabulary of size " + std::to_string(vocab));
    }
  }
  ad::Graph& g = mg.graph();
  const std::size_t hd = config_.decoder_hidden;
  ad::Var table = mg.param(embed_id(domain));
  ad::Var keys = ad::matmul(latent.states, mg.param(kAttKey));
  CellState state{
      ad::tanh(ad::add_row(ad::matmul(latent.pooled, mg.param(kDecInitW)), mg.param(kDecInitB))),
      g.constant(Array(latent.batch, hd, 0.0))};

  DecodeOutput out;
  std::vector<ad::Var> outputs;
  outputs.reserve(target.steps - 1);
  for (std::size_t t = 0; t + 1 < target.steps; ++t) {
    AttentionStep att = attend(mg, latent, keys, state.h);
    if (keep_attention) out.attention.push_back(att.weights.value());
    ad::Var emb = ad::gather_rows(table, target.column(t));
    if (dropout_rng) emb = ad::dropout(emb, config_.dropout_rate, *dropout_rng);
    state = lstm_step(mg, kDecCellW, kDecCellB, ad::concat_cols({emb, att.context}), state, hd);
    ad::Var o = ad::tanh(ad::add_row(
        ad::matmul(ad::concat_cols({state.h, att.context}), mg.param(kDecOutW)),
        mg.param(kDecOutB)));
    if (dropout_rng) o = ad::dropout(o, config_.dropout_rate, *dropout_rng);
    outputs.push_back(o);
  }
  ad::Var stacked = ad::stack_steps(outputs);
  ad::Var logits =
      ad::add_row(ad::matmul(stacked, mg.param(proj_w_id(domain))), mg.param(proj_b_id(domain)));
  out.logp = ad::log_softmax_rows(logits);
  return out;
}

std::vector<std::vector<int>> CrossDomainAutoencoder::decode_greedy(
    ModelGraph& mg, Domain domain, const LatentStates& latent,
    std::span<const std::size_t> max_len) const {
  if (max_len.size() != latent.batch) {
    throw ShapeError("decode_greedy: " + std::to_string(max_len.size()) + " limits for " +
                     std::to_string(latent.batch) + " sentences");
  }
  ad::Graph& g = mg.graph();
  const std::size_t batch = latent.batch, hd = config_.decoder_hidden;
  ad::Var table = mg.param(embed_id(domain));
  ad::Var keys = ad::matmul(latent.states, mg.param(kAttKey));
  CellState state{
      ad::tanh(ad::add_row(ad::matmul(latent.pooled, mg.param(kDecInitW)), mg.param(kDecInitB))),
      g.constant(Array(batch, hd, 0.0))};

  std::vector<std::vector<int>> emitted(batch);
  std::vector<bool> done(batch, false);
  std::size_t longest = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    longest = std::max(longest, max_len[b]);
    if (max_len[b] == 0) done[b] = true;
  }
  std::vector<int> previous(batch, kBosId);
  for (std::size_t t = 0; t < longest; ++t) {
    if (std::all_of(done.begin(), done.end(), [](bool d) { return d; })) break;
    AttentionStep att = attend(mg, latent, keys, state.h);
    ad::Var emb = ad::gather_rows(table, previous);
    state = lstm_step(mg, kDecCellW, kDecCellB, ad::concat_cols({emb, att.context}), state, hd);
    ad::Var o = ad::tanh(ad::add_row(
        ad::matmul(ad::concat_cols({state.h, att.context}), mg.param(kDecOutW)),
        mg.param(kDecOutB)));
    ad::Var logits =
        ad::add_row(ad::matmul(o, mg.param(proj_w_id(domain))), mg.param(proj_b_id(domain)));
    const Array& lv = logits.value();
    for (std::size_t b = 0; b < batch; ++b) {
      auto row = lv.row(b);
      const int best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      previous[b] = best;
      if (done[b]) continue;
      emitted[b].push_back(best);
      if (best == kEosId || emitted[b].size() >= max_len[b]) done[b] = true;
    }
  }
  return emitted;
}

ad::Var CrossDomainAutoencoder::discriminate(ModelGraph& mg, ad::Var pooled) const {
  if (pooled.cols() != config_.latent_dim()) {
    throw ShapeError("discriminate: width " + std::to_string(pooled.cols()) + ", expected " +
                     std::to_string(config_.latent_dim()));
  }
  ad::Var hidden = ad::tanh(
      ad::add_row(ad::matmul(pooled, mg.param(kDiscHiddenW)), mg.param(kDiscHiddenB)));
  return ad::sigmoid(
      ad::add_row(ad::matmul(hidden, mg.param(kDiscOutW)), mg.param(kDiscOutB)));
}

void target_rows(const TokenBatch& target, std::vector<int>& ids, std::vector<double>& weights) {
  const std::size_t steps = target.steps - 1;
  ids.assign(target.batch * steps, kPadId);
  weights.assign(target.batch * steps, 0.0);
  for (std::size_t b = 0; b < target.batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      if (t + 1 < target.lengths[b]) {
        ids[b * steps + t] = target.at(b, t + 1);
        weights[b * steps + t] = 1.0;
      }
    }
  }
}

ad::Var loss_noise(ad::Var logp, const TokenBatch& target) {
  std::vector<int> ids;
  std::vector<double> weights;
  target_rows(target, ids, weights);
  double count = 0.0;
  for (double w : weights) count += w;
  return ad::nll(logp, ids, weights, std::max(count, 1.0));
}

ad::Var loss_trans(ad::Var logp, const TokenBatch& target) { return loss_noise(logp, target); }

ad::Var loss_adv(ad::Var predicted, std::span<const double> domain_labels) {
  return ad::binary_cross_entropy(predicted, domain_labels);
}

double loss_final(double l_noise, double l_trans, double l_adv, const LossWeights& w) {
  return w.noise * l_noise + w.trans * l_trans + w.adv * l_adv;
}

ad::Var loss_final(ad::Var l_noise, ad::Var l_trans, ad::Var l_adv, const LossWeights& w) {
  ad::Var total = ad::scale(l_noise, w.noise);
  if (l_trans.valid()) total = ad::add(total, ad::scale(l_trans, w.trans));
  if (l_adv.valid()) total = ad::add(total, ad::scale(l_adv, w.adv));
  return total;
}

}  // namespace crossaug
