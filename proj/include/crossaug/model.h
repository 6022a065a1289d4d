#ifndef CROSSAUG_MODEL_H_
#define CROSSAUG_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crossaug/autodiff.h"
#include "crossaug/errors.h"
#include "crossaug/layers.h"
#include "crossaug/rng.h"
#include "crossaug/vocab.h"

namespace crossaug {

enum class Domain { kSource = 0, kTarget = 1 };

inline Domain other(Domain d) { return d == Domain::kSource ? Domain::kTarget : Domain::kSource; }
const char* domain_name(Domain d);

struct ModelConfig {
  std::size_t embed_dim = 512;
  std::size_t encoder_hidden = 1024;  // per direction
  std::size_t decoder_hidden = 1024;
  std::size_t discriminator_hidden = 300;
  double dropout_rate = 0.5;
  std::size_t src_vocab = 0;
  std::size_t tgt_vocab = 0;

  void validate() const;
  std::size_t latent_dim() const { return 2 * encoder_hidden; }

  // key=value lines
  std::string to_manifest() const;
  static ModelConfig from_manifest(const std::string& text);

  bool operator==(const ModelConfig&) const = default;
};

struct LossWeights {
  double noise = 1.0;  // lambda 1
  double trans = 0.0;  // lambda 2
  double adv = 10.0;   // lambda 3

  void validate() const;
};

// Right-padded id matrix. Every row starts with <BOS> and ends with <EOS>.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::vector<int> ids;  // batch x steps, row-major, kPadId after each row's end
  std::vector<std::size_t> lengths;

  static TokenBatch pack(const std::vector<std::vector<int>>& sequences);
  int at(std::size_t b, std::size_t t) const { return ids[b * steps + t]; }
  std::vector<int> column(std::size_t t) const;
  std::size_t tokens() const;
};

struct LatentStates {
  ad::Var states;  // (batch*steps) x 2H, row b*steps+t
  ad::Var pooled;  // batch x 2H, mean over each row's real timesteps
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::vector<std::size_t> lengths;
  Array attention_mask;  // batch x steps; 0 on real tokens, large negative on padding
};

struct DecodeOutput {
  // (batch*(target steps-1)) x V, row b*(steps-1)+t predicts target token t+1.
  ad::Var logp;
  // Per decoding step, batch x source steps; filled when requested.
  std::vector<Array> attention;
};

class CrossDomainAutoencoder;

// Binds a model's parameters into one graph, once each.
class ModelGraph {
 public:
  ModelGraph(CrossDomainAutoencoder& model, ad::Graph& graph);

  ad::Graph& graph() { return graph_; }
  ad::Var param(std::size_t id);
  CrossDomainAutoencoder& model() { return model_; }

 private:
  CrossDomainAutoencoder& model_;
  ad::Graph& graph_;
  std::vector<ad::Var> bound_;
};

// Per-domain embedders and output projections around a shared bi-LSTM
// encoder and a shared LSTM decoder with additive attention, plus a domain
// discriminator over the pooled encoder states.
class CrossDomainAutoencoder {
 public:
  enum ParamId : std::size_t {
    kEmbedSrc,
    kEmbedTgt,
    kEncFwdW,
    kEncFwdB,
    kEncBwdW,
    kEncBwdB,
    kDecInitW,
    kDecInitB,
    kAttQuery,
    kAttKey,
    kAttScore,
    kDecCellW,
    kDecCellB,
    kDecOutW,
    kDecOutB,
    kProjSrcW,
    kProjSrcB,
    kProjTgtW,
    kProjTgtB,
    kDiscHiddenW,
    kDiscHiddenB,
    kDiscOutW,
    kDiscOutB,
    kNumParams
  };

  CrossDomainAutoencoder() = default;
  // Allocates zero-valued parameters; call initialize() before training.
  explicit CrossDomainAutoencoder(const ModelConfig& config);

  // Uniform(-0.1, 0.1) weights, forget-gate bias 1, zero other biases.
  // Embedding rows and projection columns are drawn from a stream keyed by
  // the symbol string, so a symbol present in both vocabularies starts with
  // the same vectors in both domains. Without vocabularies the row index is
  // the key.
  void initialize(std::uint64_t seed, const Vocabulary* src = nullptr,
                  const Vocabulary* tgt = nullptr);
  bool initialized() const { return initialized_; }

  const ModelConfig& config() const { return config_; }
  std::size_t vocab_size(Domain d) const {
    return d == Domain::kSource ? config_.src_vocab : config_.tgt_vocab;
  }

  // Training mode when dropout_rng is non-null.
  LatentStates encode(ModelGraph& mg, Domain domain, const TokenBatch& input,
                      Rng* dropout_rng = nullptr) const;
  DecodeOutput decode_teacher_forced(ModelGraph& mg, Domain domain, const LatentStates& latent,
                                     const TokenBatch& target, Rng* dropout_rng = nullptr,
                                     bool keep_attention = false) const;
  // Argmax decoding from <BOS>. Row b emits at most max_len[b] tokens and
  // stops after <EOS>; the result excludes <BOS> and includes <EOS> if emitted.
  std::vector<std::vector<int>> decode_greedy(ModelGraph& mg, Domain domain,
                                              const LatentStates& latent,
                                              std::span<const std::size_t> max_len) const;
  // P(source domain) per pooled row, shape batch x 1.
  ad::Var discriminate(ModelGraph& mg, ad::Var pooled) const;

  ad::Parameter& parameter(std::size_t id) { return params_[id]; }
  const ad::Parameter& parameter(std::size_t id) const { return params_[id]; }
  ad::Parameter& parameter(std::string_view name);

  // Embedders, encoder, decoder and projections.
  std::vector<ad::Parameter*> generator_parameters();
  std::vector<ad::Parameter*> discriminator_parameters();
  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;

  void copy_parameters_from(const CrossDomainAutoencoder& other);

  // Writes the checkpoint at `path` and the config manifest at path + ".manifest".
  void save(const std::string& path) const;
  static CrossDomainAutoencoder load(const std::string& path);

 private:
  using CellState = LstmState;
  CellState lstm_step(ModelGraph& mg, std::size_t w, std::size_t b, ad::Var input,
                      CellState prev, std::size_t hidden) const;

  ModelConfig config_;
  std::vector<ad::Parameter> params_;
  bool initialized_ = false;
};

// Mean token NLL of the clean target given its noisy encoding; padding excluded.
ad::Var loss_noise(ad::Var logp, const TokenBatch& target);
// Same form; the encoder input was the cross-domain transformed sentence.
ad::Var loss_trans(ad::Var logp, const TokenBatch& target);
// Mean binary cross-entropy; labels are 1 for the source domain.
ad::Var loss_adv(ad::Var predicted, std::span<const double> domain_labels);

double loss_final(double l_noise, double l_trans, double l_adv, const LossWeights& w);
ad::Var loss_final(ad::Var l_noise, ad::Var l_trans, ad::Var l_adv, const LossWeights& w);

// Token-level NLL weights and targets for a teacher-forced decode of `target`.
void target_rows(const TokenBatch& target, std::vector<int>& ids, std::vector<double>& weights);

}  // namespace crossaug

#endif  // CROSSAUG_MODEL_H_
