#include "crossaug/optim.h"

#include <cmath>

namespace crossaug {

namespace {

void ensure_state(std::vector<Array>& state, std::span<ad::Parameter* const> params) {
  if (state.size() == params.size()) return;
  state.clear();
  for (const auto* p : params) state.emplace_back(p->value.shape(), 0.0);
}

}  // namespace

Adam::Adam(double lr, double beta1, double beta2, double eps, double weight_decay)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

void Adam::step(std::span<ad::Parameter* const> params) {
  ensure_state(m_, params);
  ensure_state(v_, params);
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    ad::Parameter& p = *params[k];
    double* w = p.value.data();
    double* g = p.grad.data();
    double* m = m_[k].data();
    double* v = v_[k].data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      w[i] -= lr_ * (update + weight_decay_ * w[i]);
      g[i] = 0.0;
    }
  }
}

RMSprop::RMSprop(double lr, double alpha, double eps) : lr_(lr), alpha_(alpha), eps_(eps) {}

void RMSprop::step(std::span<ad::Parameter* const> params) {
  ensure_state(sq_, params);
  for (std::size_t k = 0; k < params.size(); ++k) {
    ad::Parameter& p = *params[k];
    double* w = p.value.data();
    double* g = p.grad.data();
    double* s = sq_[k].data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      s[i] = alpha_ * s[i] + (1.0 - alpha_) * g[i] * g[i];
      w[i] -= lr_ * g[i] / (std::sqrt(s[i]) + eps_);
      g[i] = 0.0;
    }
  }
}

double global_grad_norm(std::span<ad::Parameter* const> params) {
  double total = 0.0;
  for (const auto* p : params) {
    for (double g : p->grad.values()) total += g * g;
  }
  return std::sqrt(total);
}

double clip_grad_norm(std::span<ad::Parameter* const> params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (norm > max_norm) {
    const double factor = max_norm / (norm + 1e-6);
    for (auto* p : params) {
      for (double& g : p->grad.values()) g *= factor;
    }
  }
  return norm;
}

void zero_grads(std::span<ad::Parameter* const> params) {
  for (auto* p : params) p->zero_grad();
}

}  // namespace crossaug
