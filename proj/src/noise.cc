#include "crossaug/noise.h"

namespace crossaug {

void NoiseConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError(std::string(name) + " must be in [0, 1], got " + std::to_string(p));
    }
  };
  prob(p_drop, "p_drop");
  prob(p_mask, "p_mask");
  prob(p_shuffle, "p_shuffle");
}

namespace {
const std::string kMask(kMaskToken);
}

LinearSequence noise_shuffle(const LinearSequence& x, const NoiseConfig& cfg, Rng& rng) {
  return {noise_detail::shuffle(x.tokens, cfg.shuffle_window, rng)};
}

LinearSequence noise_dropout(const LinearSequence& x, const NoiseConfig& cfg, Rng& rng) {
  return {noise_detail::drop(x.tokens, cfg.p_drop, rng)};
}

LinearSequence noise_mask(const LinearSequence& x, const NoiseConfig& cfg, Rng& rng) {
  return {noise_detail::mask(x.tokens, cfg.p_mask, kMask, rng)};
}

LinearSequence apply_noise(const LinearSequence& x, const NoiseConfig& cfg, Rng& rng) {
  return {noise_detail::apply(x.tokens, cfg, kMask, rng)};
}

std::vector<int> noise_shuffle(const std::vector<int>& ids, const NoiseConfig& cfg, Rng& rng) {
  return noise_detail::shuffle(ids, cfg.shuffle_window, rng);
}

std::vector<int> noise_dropout(const std::vector<int>& ids, const NoiseConfig& cfg, Rng& rng) {
  return noise_detail::drop(ids, cfg.p_drop, rng);
}

std::vector<int> noise_mask(const std::vector<int>& ids, const NoiseConfig& cfg, Rng& rng) {
  return noise_detail::mask(ids, cfg.p_mask, kMaskId, rng);
}

std::vector<int> apply_noise(const std::vector<int>& ids, const NoiseConfig& cfg, Rng& rng) {
  return noise_detail::apply(ids, cfg, kMaskId, rng);
}

Rng sentence_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t sentence) {
  return Rng(derive_seed(seed, stream, sentence));
}

}  // namespace crossaug
