#ifndef CROSSAUG_GRADCHECK_H_
#define CROSSAUG_GRADCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

#include "crossaug/autodiff.h"
#include "crossaug/model.h"

namespace crossaug {

struct NamedCheck {
  std::string name;
  ad::GradCheckResult result;
};

// One finite-difference check per differentiable primitive, each reduced to
// a scalar through a random linear functional.
std::vector<NamedCheck> check_primitives(std::uint64_t seed);

// Phase-1 objective (denoising on both sides plus the flipped adversarial
// term) of a tiny model: embed 4, hidden 6, vocab 12, sequences of at most
// 5 tokens, parameters drawn N(0, init_std^2).
struct ObjectiveProblem {
  CrossDomainAutoencoder model;
  TokenBatch src;
  TokenBatch tgt;

  ad::Var loss(ad::Graph& g);
};
ObjectiveProblem make_objective(std::uint64_t seed, double init_std = 0.5);

// grad_check of make_objective(seed, init_std). Small draws make many
// gradients so tiny that roundoff alone breaks a relative tolerance.
ad::GradCheckResult check_objective(std::uint64_t seed, double init_std = 0.5);

}  // namespace crossaug

#endif  // CROSSAUG_GRADCHECK_H_
