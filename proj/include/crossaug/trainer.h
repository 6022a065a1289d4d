#ifndef CROSSAUG_TRAINER_H_
#define CROSSAUG_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crossaug/corpus.h"
#include "crossaug/model.h"
#include "crossaug/noise.h"
#include "crossaug/optim.h"
#include "crossaug/vocab.h"

namespace crossaug {

// A non-finite loss; what() names the phase, epoch, batch and loss components.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t phase1_epochs = 50;
  std::size_t phase2_epochs = 50;
  double generator_lr = 5e-4;      // Adam over embedders, encoder, decoder, projections
  double discriminator_lr = 5e-4;  // RMSprop
  double grad_clip = 5.0;
  LossWeights phase1_weights{1.0, 0.0, 10.0};
  LossWeights phase2_weights{1.0, 1.0, 10.0};
  NoiseConfig noise;
  std::size_t max_vocab = 10000;
  double dev_fraction = 0.1;  // used only when no dev corpus is given
  std::uint64_t seed = 1;

  void validate() const;
};

struct Profile {
  ModelConfig model;  // vocabulary sizes are filled in from the data
  TrainConfig train;
};

Profile paper_profile();
Profile desk_profile();
// "paper" or "desk"
Profile profile_by_name(const std::string& name);

// One domain's sentences, linearized and encoded.
struct DomainData {
  std::vector<std::vector<int>> train;
  std::vector<std::vector<int>> dev;
};

struct TrainData {
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
  DomainData src;
  DomainData tgt;
};

// Builds both vocabularies from the training sentences and encodes everything.
// A null dev corpus is replaced by a seeded hold-out of dev_fraction of the
// matching training corpus.
TrainData prepare_data(const Corpus& src, const Corpus& tgt, const Corpus* src_dev,
                       const Corpus* tgt_dev, const TrainConfig& cfg);

// Index pairs (into src, into tgt) for one epoch, split into batches. Both
// sides are shuffled independently and paired by position; the smaller side
// cycles until the larger one is used up.
struct BatchPlan {
  std::vector<std::size_t> src;
  std::vector<std::size_t> tgt;
};
std::vector<BatchPlan> pair_batches(std::size_t n_src, std::size_t n_tgt, std::size_t batch_size,
                                    Rng& rng);

struct BatchStats {
  int phase = 1;
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double l_noise = 0.0;
  double l_trans = 0.0;
  double l_adv = 0.0;   // encoder side, flipped labels
  double l_disc = 0.0;  // discriminator side, true labels
  double generator_norm = 0.0;  // before clipping
  double generator_norm_clipped = 0.0;
  double discriminator_norm_clipped = 0.0;
  double max_softmax_row_error = 0.0;
};

struct EpochRecord {
  int phase = 1;
  std::size_t epoch = 0;
  double l_noise = 0.0;
  double l_trans = 0.0;
  double l_adv = 0.0;
  double dev_denoise_ppl = 0.0;
  double dev_detransform_ppl = std::numeric_limits<double>::quiet_NaN();  // phase 2 only
  double criterion = 0.0;
  bool improved = false;
};

// Tab-separated, no timestamps.
std::string log_header();
std::string log_line(const EpochRecord& r);

struct TrainerState {
  CrossDomainAutoencoder model;
  CrossDomainAutoencoder snapshot;  // frozen transformer for phase 2
  CrossDomainAutoencoder best;
  double best_criterion = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t epoch = 0;  // epochs completed in the current phase
  int phase = 0;          // last phase run
  std::vector<EpochRecord> log;

  TrainerState() = default;
  explicit TrainerState(const ModelConfig& config);
};

struct TrainHooks {
  std::function<void(const BatchStats&)> on_batch;
  // Return false to end the phase after this epoch.
  std::function<bool(const EpochRecord&)> on_epoch;
};

// Fresh state sized for the data, initialized from cfg.seed.
TrainerState init_state(const ModelConfig& model_cfg, const TrainData& data,
                        const TrainConfig& cfg);

void train_phase1(TrainerState& state, const TrainData& data, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});
// Starts from state.best (the phase-1 selection) and resets the selection.
void train_phase2(TrainerState& state, const TrainData& data, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

enum class PplMode { kDenoise, kDetransform };

struct PerplexityResult {
  double nll = 0.0;
  std::size_t tokens = 0;
  double perplexity() const;
};

// Dropout off. Denoise: the encoder sees a noised copy drawn from a fixed
// stream of `seed`. Detransform: the encoder sees `transformer`'s greedy
// translation into the other domain. The decoder always predicts the clean
// sentence. Batches may be evaluated in parallel; the sum is taken in batch
// order, so the result does not depend on the thread count.
PerplexityResult evaluate_perplexity(CrossDomainAutoencoder& model,
                                     const std::vector<std::vector<int>>& sentences, Domain domain,
                                     PplMode mode, const NoiseConfig& noise, std::uint64_t seed,
                                     std::size_t batch_size,
                                     CrossDomainAutoencoder* transformer = nullptr);

// Greedy translation of encoded sentences from `from` into the other domain.
// Each result is <BOS> ... <EOS> and at most as long as its input.
std::vector<std::vector<int>> transform(CrossDomainAutoencoder& model,
                                        const std::vector<std::vector<int>>& sentences,
                                        Domain from, std::size_t batch_size);

}  // namespace crossaug

#endif  // CROSSAUG_TRAINER_H_
