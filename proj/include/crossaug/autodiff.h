#ifndef CROSSAUG_AUTODIFF_H_
#define CROSSAUG_AUTODIFF_H_

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crossaug/array.h"
#include "crossaug/rng.h"

// Tape-based reverse-mode differentiation over 2-D arrays.
//
// A Graph records nodes in creation order, which is a topological order, so
// backward() is a single reverse sweep. Parameters live outside any graph;
// a graph references them and accumulates into Parameter::grad, which keeps
// accumulating across graphs until an optimizer clears it.
//
// A graph belongs to one thread. Independent graphs may read the same
// parameters concurrently as long as none of them runs backward().
namespace crossaug::ad {

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Array value);

  std::string name;
  Array value;
  Array grad;

  void zero_grad() { grad.fill(0.0); }
};

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;

  const Array& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double item() const;

  Graph* graph() const { return graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Diagnostics gathered while the forward pass runs.
struct GraphStats {
  // max over all normalized rows of |sum(p) - 1|
  double max_softmax_row_error = 0.0;
  std::size_t softmax_rows = 0;
};

class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  // A graph built with track_gradients=false records values only; use it for
  // evaluation and decoding.
  explicit Graph(bool track_gradients = true) : tracking_(track_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Array value);
  Var parameter(Parameter& p);

  // Seeds d(loss)/d(loss) = 1 and runs the reverse sweep.
  void backward(Var loss);

  const Array& value(std::size_t id) const;
  // Gradient buffer of a node, allocated as zeros on first use.
  Array& grad(std::size_t id);
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool tracking() const { return tracking_; }
  std::size_t size() const { return nodes_.size(); }

  GraphStats& stats() { return stats_; }
  const GraphStats& stats() const { return stats_; }

  // Primitive plumbing: adds a node computed from `parents`. The backward
  // function is dropped when no parent needs a gradient.
  Var record(Array value, std::span<const Var> parents, BackwardFn backward);
  Var record(Array value, std::initializer_list<Var> parents, BackwardFn backward) {
    return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                  std::move(backward));
  }

 private:
  struct Node {
    Array value;
    Array grad;
    Parameter* param = nullptr;
    bool requires_grad = false;
    bool grad_live = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  GraphStats stats_;
  bool tracking_;
};

// ---- primitives ------------------------------------------------------------
// All primitives throw ShapeError naming both shapes on mismatch.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
// a (m x n) + bias (1 x n) broadcast over rows
Var add_row(Var a, Var bias);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
// Elementwise product with a constant array of the same shape.
Var mul_const(Var a, const Array& c);
Var scale(Var a, double s);
Var tanh(Var a);
Var sigmoid(Var a);
// log(max(x, 1e-12)); the gradient is zero where the floor is active.
Var log(Var a);

// Row-wise softmax. `additive_mask`, when given, has the same shape and is
// added to the logits first (use a large negative value to exclude entries).
Var softmax_rows(Var a, const Array* additive_mask = nullptr);
Var log_softmax_rows(Var a, const Array* additive_mask = nullptr);

Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);

// Embedding lookup: row ids[i] of table becomes output row i.
Var gather_rows(Var table, std::span<const int> ids);

// -sum_i weights[i] * logp(i, targets[i]) / normalizer, as a 1x1 node.
Var nll(Var logp, std::span<const int> targets, std::span<const double> weights,
        double normalizer);

Var sum(Var a);
Var mean(Var a);

// Per-row select: out[r] = mask[r] * a[r] + (1 - mask[r]) * b[r].
Var row_blend(std::span<const double> mask, Var a, Var b);
// (B x D) -> (B*times x D); row b*times+j of the result is row b of a.
Var repeat_rows(Var a, std::size_t times);
Var reshape(Var a, std::size_t rows, std::size_t cols);
// alpha (B x T), values (B*T x D) -> (B x D): out[b] = sum_j alpha[b,j] * values[b*T+j]
Var weighted_rows(Var alpha, Var values);
// steps[t] is (B x D); result is (B*T x D) with row b*T+t = steps[t][b].
Var stack_steps(std::span<const Var> steps);
// Inverted dropout; identity when rate is 0.
Var dropout(Var a, double rate, Rng& rng);
// Mean binary cross-entropy of probabilities (m x 1) against 0/1 labels,
// with probabilities clamped to [1e-12, 1 - 1e-12].
Var binary_cross_entropy(Var prob, std::span<const double> labels);
// Same value, no gradient path.
Var detach(Var a);

// ---- gradient checking -----------------------------------------------------

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

// Compares the analytic gradient of `loss` with central differences of
// step h for every coordinate of `params`. Relative error per coordinate is
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|). Parameter grads
// are left holding the analytic gradient. Throws on non-finite values.
GradCheckResult grad_check(const std::function<Var(Graph&)>& loss,
                           std::span<Parameter* const> params, double h = 1e-5);

}  // namespace crossaug::ad

#endif  // CROSSAUG_AUTODIFF_H_
