#ifndef CROSSAUG_OPTIM_H_
#define CROSSAUG_OPTIM_H_

#include <cstddef>
#include <span>
#include <vector>

#include "crossaug/autodiff.h"

namespace crossaug {

// Optimizers keep per-parameter state by position, so step() must always be
// called with the same parameter list in the same order. step() clears the
// gradients it consumed.

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
                double weight_decay = 0.0);

  void step(std::span<ad::Parameter* const> params);
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  std::size_t t_ = 0;
  std::vector<Array> m_, v_;
};

class RMSprop {
 public:
  explicit RMSprop(double lr, double alpha = 0.99, double eps = 1e-8);

  void step(std::span<ad::Parameter* const> params);

 private:
  double lr_, alpha_, eps_;
  std::vector<Array> sq_;
};

double global_grad_norm(std::span<ad::Parameter* const> params);

// Rescales gradients so their global L2 norm is at most max_norm. Returns the
// norm measured before clipping.
double clip_grad_norm(std::span<ad::Parameter* const> params, double max_norm);

void zero_grads(std::span<ad::Parameter* const> params);

}  // namespace crossaug

#endif  // CROSSAUG_OPTIM_H_
