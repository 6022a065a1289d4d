#include "crossaug/gradcheck.h"

#include <functional>

#include "crossaug/model.h"

namespace crossaug {
namespace {

using ad::Graph;
using ad::Parameter;
using ad::Var;

Array random_array(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Array a(r, c);
  for (double& v : a.values()) v = rng.uniform(lo, hi);
  return a;
}

// Runs one check: `inputs` become parameters, `f` builds the primitive, and
// the output is contracted with fixed random weights.
NamedCheck run(const std::string& name, std::vector<Array> inputs,
               const std::function<Var(Graph&, std::vector<Var>&)>& f, Rng& rng) {
  std::vector<Parameter> params;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    params.emplace_back(name + "." + std::to_string(i), std::move(inputs[i]));
  }
  Array weights;
  {
    Graph probe(false);
    std::vector<Var> in;
    for (auto& p : params) in.push_back(probe.parameter(p));
    const Var out = f(probe, in);
    weights = random_array(out.rows(), out.cols(), rng);
  }
  auto loss = [&](Graph& g) {
    std::vector<Var> in;
    for (auto& p : params) in.push_back(g.parameter(p));
    return ad::sum(ad::mul_const(f(g, in), weights));
  };
  std::vector<Parameter*> ptrs;
  for (auto& p : params) ptrs.push_back(&p);
  return {name, ad::grad_check(loss, ptrs)};
}

}  // namespace

std::vector<NamedCheck> check_primitives(std::uint64_t seed) {
  Rng rng(seed);
  auto A = [&](std::size_t r, std::size_t c) { return random_array(r, c, rng); };
  std::vector<NamedCheck> out;
  using In = std::vector<Var>;

  out.push_back(run("matmul", {A(3, 4), A(4, 2)},
                    [](Graph&, In& x) { return ad::matmul(x[0], x[1]); }, rng));
  out.push_back(run("add", {A(3, 4), A(3, 4)},
                    [](Graph&, In& x) { return ad::add(x[0], x[1]); }, rng));
  out.push_back(run("add_row", {A(3, 4), A(1, 4)},
                    [](Graph&, In& x) { return ad::add_row(x[0], x[1]); }, rng));
  out.push_back(run("sub", {A(3, 4), A(3, 4)},
                    [](Graph&, In& x) { return ad::sub(x[0], x[1]); }, rng));
  out.push_back(run("mul", {A(3, 4), A(3, 4)},
                    [](Graph&, In& x) { return ad::mul(x[0], x[1]); }, rng));
  const Array c = A(3, 4);
  out.push_back(run("mul_const", {A(3, 4)},
                    [&](Graph&, In& x) { return ad::mul_const(x[0], c); }, rng));
  out.push_back(run("scale", {A(3, 4)},
                    [](Graph&, In& x) { return ad::scale(x[0], -1.7); }, rng));
  out.push_back(run("tanh", {A(3, 4)}, [](Graph&, In& x) { return ad::tanh(x[0]); }, rng));
  out.push_back(run("sigmoid", {A(3, 4)}, [](Graph&, In& x) { return ad::sigmoid(x[0]); }, rng));
  out.push_back(run("log", {random_array(3, 4, rng, 0.2, 2.0)},
                    [](Graph&, In& x) { return ad::log(x[0]); }, rng));
  Array mask(3, 4);
  mask(0, 3) = -1e9;
  mask(2, 0) = -1e9;
  out.push_back(run("softmax_rows", {A(3, 4)},
                    [&](Graph&, In& x) { return ad::softmax_rows(x[0], &mask); }, rng));
  // Masked log-probabilities sit near -1e9, where central differences are
  // pure roundoff; only the live entries are contracted.
  Array live(3, 4, 1.0);
  live(0, 3) = 0.0;
  live(2, 0) = 0.0;
  out.push_back(run("log_softmax_rows", {A(3, 4)}, [&](Graph&, In& x) {
    return ad::mul_const(ad::log_softmax_rows(x[0], &mask), live);
  }, rng));
  out.push_back(run("concat_cols", {A(3, 2), A(3, 3)},
                    [](Graph&, In& x) { return ad::concat_cols({x[0], x[1]}); }, rng));
  out.push_back(run("slice_cols", {A(3, 5)},
                    [](Graph&, In& x) { return ad::slice_cols(x[0], 1, 3); }, rng));
  const std::vector<int> ids{2, 0, 2, 4};
  out.push_back(run("gather_rows", {A(5, 3)},
                    [&](Graph&, In& x) { return ad::gather_rows(x[0], ids); }, rng));
  const std::vector<int> targets{1, 3, 0, 2};
  const std::vector<double> tw{1.0, 0.0, 1.0, 1.0};
  out.push_back(run("nll", {A(4, 4)}, [&](Graph&, In& x) {
    return ad::nll(ad::log_softmax_rows(x[0]), targets, tw, 3.0);
  }, rng));
  out.push_back(run("sum", {A(3, 4)}, [](Graph&, In& x) { return ad::sum(x[0]); }, rng));
  out.push_back(run("mean", {A(3, 4)}, [](Graph&, In& x) { return ad::mean(x[0]); }, rng));
  const std::vector<double> blend{1.0, 0.0, 1.0};
  out.push_back(run("row_blend", {A(3, 4), A(3, 4)},
                    [&](Graph&, In& x) { return ad::row_blend(blend, x[0], x[1]); }, rng));
  out.push_back(run("repeat_rows", {A(2, 3)},
                    [](Graph&, In& x) { return ad::repeat_rows(x[0], 3); }, rng));
  out.push_back(run("reshape", {A(2, 6)},
                    [](Graph&, In& x) { return ad::reshape(x[0], 3, 4); }, rng));
  out.push_back(run("weighted_rows", {A(2, 3), A(6, 4)},
                    [](Graph&, In& x) { return ad::weighted_rows(x[0], x[1]); }, rng));
  out.push_back(run("stack_steps", {A(2, 3), A(2, 3), A(2, 3)}, [](Graph&, In& x) {
    const std::vector<Var> steps{x[0], x[1], x[2]};
    return ad::stack_steps(steps);
  }, rng));
  const std::uint64_t drop_seed = rng.next();
  out.push_back(run("dropout", {A(3, 4)}, [=](Graph&, In& x) {
    Rng r(drop_seed);
    return ad::dropout(x[0], 0.4, r);
  }, rng));
  const std::vector<double> labels{1.0, 0.0, 1.0};
  out.push_back(run("binary_cross_entropy", {A(3, 1)}, [&](Graph&, In& x) {
    return ad::binary_cross_entropy(ad::sigmoid(x[0]), labels);
  }, rng));
  return out;
}

ObjectiveProblem make_objective(std::uint64_t seed, double init_std) {
  ModelConfig c;
  c.embed_dim = 4;
  c.encoder_hidden = 6;
  c.decoder_hidden = 6;
  c.discriminator_hidden = 5;
  c.dropout_rate = 0.0;
  c.src_vocab = 12;
  c.tgt_vocab = 12;
  ObjectiveProblem p{CrossDomainAutoencoder(c), TokenBatch::pack({{2, 5, 6, 7, 3}, {2, 8, 3}}),
                     TokenBatch::pack({{2, 9, 10, 3}, {2, 11, 5, 6, 3}})};
  p.model.initialize(seed);
  Rng rng(derive_seed(seed, 0x6C));
  for (auto* q : p.model.parameters()) {
    for (double& v : q->value.values()) v = init_std * rng.normal();
  }
  return p;
}

Var ObjectiveProblem::loss(Graph& g) {
  ModelGraph mg(model, g);
  const auto ls = model.encode(mg, Domain::kSource, src);
  const auto lt = model.encode(mg, Domain::kTarget, tgt);
  const auto ds = model.decode_teacher_forced(mg, Domain::kSource, ls, src);
  const auto dt = model.decode_teacher_forced(mg, Domain::kTarget, lt, tgt);
  // generator sees flipped domain labels
  const std::vector<double> fs{0.0, 0.0}, ft{1.0, 1.0};
  const Var adv = ad::add(loss_adv(model.discriminate(mg, ls.pooled), fs),
                          loss_adv(model.discriminate(mg, lt.pooled), ft));
  return loss_final(ad::add(loss_noise(ds.logp, src), loss_noise(dt.logp, tgt)), Var(), adv,
                    LossWeights{});
}

ad::GradCheckResult check_objective(std::uint64_t seed, double init_std) {
  ObjectiveProblem p = make_objective(seed, init_std);
  auto params = p.model.parameters();
  return ad::grad_check([&](Graph& g) { return p.loss(g); }, params);
}

}  // namespace crossaug
