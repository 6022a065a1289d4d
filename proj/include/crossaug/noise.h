#ifndef CROSSAUG_NOISE_H_
#define CROSSAUG_NOISE_H_

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "crossaug/corpus.h"
#include "crossaug/errors.h"
#include "crossaug/rng.h"
#include "crossaug/vocab.h"

// Word-level perturbations for denoising reconstruction. Every operation
// leaves the first and last token (the sentence markers) in place and only
// touches the interior.
namespace crossaug {

struct NoiseConfig {
  double p_drop = 0.1;
  double p_mask = 0.1;
  double p_shuffle = 0.5;
  // Max displacement of a shuffled token; 0 draws a full permutation.
  std::size_t shuffle_window = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

namespace noise_detail {

template <class T>
void require_markers(const std::vector<T>& x) {
  if (x.size() < 2) throw CorpusError("noise: sequence needs begin and end markers");
}

template <class T>
std::vector<T> shuffle(const std::vector<T>& x, std::size_t window, Rng& rng) {
  require_markers(x);
  const std::size_t n = x.size() - 2;
  if (n < 2) return x;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (window == 0) {
    rng.shuffle(order);
  } else {
    // Sorting i + U(0, window + 1) moves no element more than `window` places.
    std::vector<double> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
      keys[i] = static_cast<double>(i) + rng.uniform(0.0, static_cast<double>(window) + 1.0);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  }
  std::vector<T> out;
  out.reserve(x.size());
  out.push_back(x.front());
  for (std::size_t i : order) out.push_back(x[i + 1]);
  out.push_back(x.back());
  return out;
}

template <class T>
std::vector<T> drop(const std::vector<T>& x, double p, Rng& rng) {
  require_markers(x);
  const std::size_t n = x.size() - 2;
  std::vector<T> out;
  out.reserve(x.size());
  out.push_back(x.front());
  for (std::size_t i = 1; i <= n; ++i) {
    if (!rng.bernoulli(p)) out.push_back(x[i]);
  }
  if (n > 0 && out.size() == 1) out.push_back(x[1 + rng.below(n)]);
  out.push_back(x.back());
  return out;
}

template <class T>
std::vector<T> mask(const std::vector<T>& x, double p, const T& mask_token, Rng& rng) {
  require_markers(x);
  std::vector<T> out = x;
  for (std::size_t i = 1; i + 1 < out.size(); ++i) {
    if (rng.bernoulli(p)) out[i] = mask_token;
  }
  return out;
}

// shuffle (with probability p_shuffle) -> dropout -> mask
template <class T>
std::vector<T> apply(const std::vector<T>& x, const NoiseConfig& cfg, const T& mask_token,
                     Rng& rng) {
  std::vector<T> out = rng.bernoulli(cfg.p_shuffle) ? shuffle(x, cfg.shuffle_window, rng) : x;
  out = drop(out, cfg.p_drop, rng);
  return mask(out, cfg.p_mask, mask_token, rng);
}

}  // namespace noise_detail

LinearSequence noise_shuffle(const LinearSequence& x, const NoiseConfig& cfg, Rng& rng);
LinearSequence noise_dropout(const LinearSequence& x, const NoiseConfig& cfg, Rng& rng);
LinearSequence noise_mask(const LinearSequence& x, const NoiseConfig& cfg, Rng& rng);
LinearSequence apply_noise(const LinearSequence& x, const NoiseConfig& cfg, Rng& rng);

// Same operations on encoded sequences; <MSK> is kMaskId.
std::vector<int> noise_shuffle(const std::vector<int>& ids, const NoiseConfig& cfg, Rng& rng);
std::vector<int> noise_dropout(const std::vector<int>& ids, const NoiseConfig& cfg, Rng& rng);
std::vector<int> noise_mask(const std::vector<int>& ids, const NoiseConfig& cfg, Rng& rng);
std::vector<int> apply_noise(const std::vector<int>& ids, const NoiseConfig& cfg, Rng& rng);

// Independent stream for one sentence of a batch so batches can be noised in
// any order (or in parallel) with the same result.
Rng sentence_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t sentence);

}  // namespace crossaug

#endif  // CROSSAUG_NOISE_H_
