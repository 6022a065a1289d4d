#include "crossaug/autodiff.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crossaug/kernels.h"

namespace crossaug::ad {

namespace {

constexpr double kLogFloor = 1e-12;

void require_same(const char* op, const Array& a, const Array& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

void add_into(Array& dst, const Array& src) {
  double* d = dst.data();
  const double* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

Graph& graph_of(Var a) {
  if (!a.valid()) throw std::logic_error("operation on an empty Var");
  return *a.graph();
}

Graph& graph_of(Var a, Var b) {
  Graph& g = graph_of(a);
  if (b.graph() != &g) throw std::logic_error("operands belong to different graphs");
  return g;
}

void note_row_sums(Graph& g, const Array& probs) {
  GraphStats& stats = g.stats();
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    double s = 0.0;
    for (double p : probs.row(r)) s += p;
    stats.max_softmax_row_error = std::max(stats.max_softmax_row_error, std::abs(s - 1.0));
  }
  stats.softmax_rows += probs.rows();
}

}  // namespace

Parameter::Parameter(std::string n, Array v)
    : name(std::move(n)), value(std::move(v)), grad(value.shape(), 0.0) {}

const Array& Var::value() const { return graph_->value(id_); }

double Var::item() const {
  const Array& v = value();
  if (v.size() != 1) {
    throw ShapeError("item() on non-scalar shape " + shape_string(v.shape()));
  }
  return v[0];
}

Var Graph::constant(Array value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::parameter(Parameter& p) {
  Node node;
  node.param = &p;
  node.requires_grad = tracking_;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Array& Graph::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.param ? n.param->value : n.value;
}

Array& Graph::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.param) return n.param->grad;
  if (!n.grad_live) {
    n.grad = Array(n.value.shape(), 0.0);
    n.grad_live = true;
  }
  return n.grad;
}

Var Graph::record(Array value, std::span<const Var> parents, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  if (tracking_) {
    for (const Var& p : parents) {
      if (p.graph() != this) throw std::logic_error("parent from another graph");
      if (nodes_[p.id()].requires_grad) {
        node.requires_grad = true;
        break;
      }
    }
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Graph::backward(Var loss) {
  if (loss.graph() != this) throw std::logic_error("loss from another graph");
  const Array& lv = value(loss.id());
  if (lv.size() != 1) {
    throw ShapeError("backward needs a scalar loss, got shape " + shape_string(lv.shape()));
  }
  if (!nodes_[loss.id()].requires_grad) return;
  grad(loss.id())[0] += 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && n.grad_live) n.backward(*this, i);
  }
}

// ---- primitives ------------------------------------------------------------

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Array& av = a.value();
  const Array& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: shape mismatch " + shape_string(av.shape()) + " vs " +
                     shape_string(bv.shape()));
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Array out(m, n);
  kernels::gemm_nn(m, k, n, av.data(), bv.data(), out.data());
  const std::size_t ia = a.id(), ib = b.id();
  return g.record(std::move(out), {a, b}, [ia, ib, m, k, n](Graph& g, std::size_t self) {
    const Array& dc = g.grad(self);
    if (g.requires_grad(ia)) {
      kernels::gemm_nt(m, n, k, dc.data(), g.value(ib).data(), g.grad(ia).data());
    }
    if (g.requires_grad(ib)) {
      kernels::gemm_tn(m, k, n, g.value(ia).data(), dc.data(), g.grad(ib).data());
    }
  });
}

Var add(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same("add", a.value(), b.value());
  Array out = a.value();
  add_into(out, b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return g.record(std::move(out), {a, b}, [ia, ib](Graph& g, std::size_t self) {
    const Array& dc = g.grad(self);
    if (g.requires_grad(ia)) add_into(g.grad(ia), dc);
    if (g.requires_grad(ib)) add_into(g.grad(ib), dc);
  });
}

Var add_row(Var a, Var bias) {
  Graph& g = graph_of(a, bias);
  const Array& av = a.value();
  const Array& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw ShapeError("add_row: shape mismatch " + shape_string(av.shape()) + " vs " +
                     shape_string(bv.shape()));
  }
  Array out = av;
  const std::size_t n = av.cols();
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double* o = out.data() + r * n;
    for (std::size_t j = 0; j < n; ++j) o[j] += bv[j];
  }
  const std::size_t ia = a.id(), ib = bias.id();
  return g.record(std::move(out), {a, bias}, [ia, ib](Graph& g, std::size_t self) {
    const Array& dc = g.grad(self);
    if (g.requires_grad(ia)) add_into(g.grad(ia), dc);
    if (g.requires_grad(ib)) {
      Array& db = g.grad(ib);
      const std::size_t n = dc.cols();
      for (std::size_t r = 0; r < dc.rows(); ++r) {
        const double* d = dc.data() + r * n;
        for (std::size_t j = 0; j < n; ++j) db[j] += d[j];
      }
    }
  });
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same("sub", a.value(), b.value());
  Array out = a.value();
  const Array& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return g.record(std::move(out), {a, b}, [ia, ib](Graph& g, std::size_t self) {
    const Array& dc = g.grad(self);
    if (g.requires_grad(ia)) add_into(g.grad(ia), dc);
    if (g.requires_grad(ib)) {
      Array& db = g.grad(ib);
      for (std::size_t i = 0; i < dc.size(); ++i) db[i] -= dc[i];
    }
  });
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same("mul", a.value(), b.value());
  Array out = a.value();
  const Array& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return g.record(std::move(out), {a, b}, [ia, ib](Graph& g, std::size_t self) {
    const Array& dc = g.grad(self);
    if (g.requires_grad(ia)) {
      Array& da = g.grad(ia);
      const Array& bv = g.value(ib);
      for (std::size_t i = 0; i < dc.size(); ++i) da[i] += dc[i] * bv[i];
    }
    if (g.requires_grad(ib)) {
      Array& db = g.grad(ib);
      const Array& av = g.value(ia);
      for (std::size_t i = 0; i < dc.size(); ++i) db[i] += dc[i] * av[i];
    }
  });
}

Var mul_const(Var a, const Array& c) {
  Graph& g = graph_of(a);
  require_same("mul_const", a.value(), c);
  Array out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c[i];
  const std::size_t ia = a.id();
  return g.record(std::move(out), {a}, [ia, c](Graph& g, std::size_t self) {
    const Array& dc = g.grad(self);
    Array& da = g.grad(ia);
    for (std::size_t i = 0; i < dc.size(); ++i) da[i] += dc[i] * c[i];
  });
}

Var scale(Var a, double s) {
  Graph& g = graph_of(a);
  Array out = a.value();
  for (double& v : out.values()) v *= s;
  const std::size_t ia = a.id();
  return g.record(std::move(out), {a}, [ia, s](Graph& g, std::size_t self) {
    const Array& dc = g.grad(self);
    Array& da = g.grad(ia);
    for (std::size_t i = 0; i < dc.size(); ++i) da[i] += dc[i] * s;
  });
}

Var tanh(Var a) {
  Graph& g = graph_of(a);
  Array out = a.value();
  for (double& v : out.values()) v = std::tanh(v);
  const std::size_t ia = a.id();
  return g.record(std::move(out), {a}, [ia](Graph& g, std::size_t self) {
    const Array& dc = g.grad(self);
    const Array& y = g.value(self);
    Array& da = g.grad(ia);
    for (std::size_t i = 0; i < dc.size(); ++i) da[i] += dc[i] * (1.0 - y[i] * y[i]);
  });
}

Var sigmoid(Var a) {
  Graph& g = graph_of(a);
  Array out = a.value();
  for (double& v : out.values()) {
    if (v >= 0) {
      v = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      v = e / (1.0 + e);
    }
  }
  const std::size_t ia = a.id();
  return g.record(std::move(out), {a}, [ia](Graph& g, std::size_t self) {
    const Array& dc = g.grad(self);
    const Array& y = g.value(self);
    Array& da = g.grad(ia);
    for (std::size_t i = 0; i < dc.size(); ++i) da[i] += dc[i] * y[i] * (1.0 - y[i]);
  });
}

Var log(Var a) {
  Graph& g = graph_of(a);
  Array out = a.value();
  for (double& v : out.values()) v = std::log(std::max(v, kLogFloor));
  const std::size_t ia = a.id();
  return g.record(std::move(out), {a}, [ia](Graph& g, std::size_t self) {
    const Array& dc = g.grad(self);
    const Array& x = g.value(ia);
    Array& da = g.grad(ia);
    for (std::size_t i = 0; i < dc.size(); ++i) {
      if (x[i] > kLogFloor) da[i] += dc[i] / x[i];
    }
  });
}

namespace {

// Writes max-shifted logits for one row and returns log(sum(exp)).
double shifted_row(std::span<const double> x, const double* mask, std::span<double> shifted) {
  double mx = -INFINITY;
  for (std::size_t j = 0; j < x.size(); ++j) {
    shifted[j] = x[j] + (mask ? mask[j] : 0.0);
    mx = std::max(mx, shifted[j]);
  }
  double total = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    shifted[j] -= mx;
    total += std::exp(shifted[j]);
  }
  return std::log(total);
}

}  // namespace

Var softmax_rows(Var a, const Array* additive_mask) {
  Graph& g = graph_of(a);
  const Array& av = a.value();
  if (additive_mask) require_same("softmax_rows mask", av, *additive_mask);
  Array out(av.shape(), 0.0);
  const std::size_t n = av.cols();
  for (std::size_t r = 0; r < av.rows(); ++r) {
    auto o = out.row(r);
    const double lse =
        shifted_row(av.row(r), additive_mask ? additive_mask->data() + r * n : nullptr, o);
    for (double& v : o) v = std::exp(v - lse);
  }
  note_row_sums(g, out);
  const std::size_t ia = a.id();
  return g.record(std::move(out), {a}, [ia](Graph& g, std::size_t self) {
    const Array& dc = g.grad(self);
    const Array& y = g.value(self);
    Array& da = g.grad(ia);
    const std::size_t n = y.cols();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const double* yr = y.data() + r * n;
      const double* dr = dc.data() + r * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += dr[j] * yr[j];
      double* ar = da.data() + r * n;
      for (std::size_t j = 0; j < n; ++j) ar[j] += yr[j] * (dr[j] - dot);
    }
  });
}

Var log_softmax_rows(Var a, const Array* additive_mask) {
  Graph& g = graph_of(a);
  const Array& av = a.value();
  if (additive_mask) require_same("log_softmax_rows mask", av, *additive_mask);
  Array out(av.shape(), 0.0);
  const std::size_t n = av.cols();
  GraphStats& stats = g.stats();
  for (std::size_t r = 0; r < av.rows(); ++r) {
    auto o = out.row(r);
    const double lse =
        shifted_row(av.row(r), additive_mask ? additive_mask->data() + r * n : nullptr, o);
    double s = 0.0;
    for (double& v : o) {
      v -= lse;
      s += std::exp(v);
    }
    stats.max_softmax_row_error = std::max(stats.max_softmax_row_error, std::abs(s - 1.0));
  }
  stats.softmax_rows += av.rows();
  const std::size_t ia = a.id();
  return g.record(std::move(out), {a}, [ia](Graph& g, std::size_t self) {
    const Array& dc = g.grad(self);
    const Array& y = g.value(self);
    Array& da = g.grad(ia);
    const std::size_t n = y.cols();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const double* yr = y.data() + r * n;
      const double* dr = dc.data() + r * n;
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) total += dr[j];
      double* ar = da.data() + r * n;
      for (std::size_t j = 0; j < n; ++j) ar[j] += dr[j] - std::exp(yr[j]) * total;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Graph& g = graph_of(parts[0]);
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids, widths;
  for (const Var& p : parts) {
    if (p.graph() != &g) throw std::logic_error("concat_cols: mixed graphs");
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: shape mismatch " + shape_string(parts[0].value().shape()) +
                       " vs " + shape_string(p.value().shape()));
    }
    ids.push_back(p.id());
    widths.push_back(p.cols());
    cols += p.cols();
  }
  Array out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Array& pv = p.value();
    const std::size_t w = pv.cols();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(pv.data() + r * w, w, out.data() + r * cols + offset);
    }
    offset += w;
  }
  return g.record(std::move(out), parts,
                  [ids = std::move(ids), widths = std::move(widths)](Graph& g, std::size_t self) {
                    const Array& dc = g.grad(self);
                    const std::size_t rows = dc.rows(), cols = dc.cols();
                    std::size_t offset = 0;
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      const std::size_t w = widths[k];
                      if (g.requires_grad(ids[k])) {
                        Array& dp = g.grad(ids[k]);
                        for (std::size_t r = 0; r < rows; ++r) {
                          const double* src = dc.data() + r * cols + offset;
                          double* dst = dp.data() + r * w;
                          for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
                        }
                      }
                      offset += w;
                    }
                  });
}

Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  Graph& g = graph_of(a);
  const Array& av = a.value();
  if (begin + count > av.cols() || count == 0) {
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of shape " +
                     shape_string(av.shape()));
  }
  const std::size_t rows = av.rows(), cols = av.cols();
  Array out(rows, count);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.data() + r * cols + begin, count, out.data() + r * count);
  }
  const std::size_t ia = a.id();
  return g.record(std::move(out), {a}, [ia, begin, count, cols](Graph& g, std::size_t self) {
    const Array& dc = g.grad(self);
    Array& da = g.grad(ia);
    for (std::size_t r = 0; r < dc.rows(); ++r) {
      const double* src = dc.data() + r * count;
      double* dst = da.data() + r * cols + begin;
      for (std::size_t j = 0; j < count; ++j) dst[j] += src[j];
    }
  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  Graph& g = graph_of(table);
  const Array& tv = table.value();
  const std::size_t d = tv.cols();
  Array out(ids.size(), d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= tv.rows()) {
      throw ShapeError("gather_rows: id " + std::to_string(ids[i]) + " outside table shape " +
                       shape_string(tv.shape()));
    }
    std::copy_n(tv.data() + static_cast<std::size_t>(ids[i]) * d, d, out.data() + i * d);
  }
  const std::size_t it = table.id();
  return g.record(std::move(out), {table},
                  [it, rows = std::vector<int>(ids.begin(), ids.end()), d](Graph& g,
                                                                            std::size_t self) {
                    const Array& dc = g.grad(self);
                    Array& dt = g.grad(it);
                    for (std::size_t i = 0; i < rows.size(); ++i) {
                      const double* src = dc.data() + i * d;
                      double* dst = dt.data() + static_cast<std::size_t>(rows[i]) * d;
                      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
                    }
                  });
}

Var nll(Var logp, std::span<const int> targets, std::span<const double> weights,
        double normalizer) {
  Graph& g = graph_of(logp);
  const Array& lv = logp.value();
  if (targets.size() != lv.rows() || weights.size() != lv.rows()) {
    throw ShapeError("nll: " + std::to_string(targets.size()) + " targets and " +
                     std::to_string(weights.size()) + " weights for log-probabilities of shape " +
                     shape_string(lv.shape()));
  }
  if (!(normalizer > 0.0)) throw std::invalid_argument("nll: normalizer must be positive");
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (weights[i] == 0.0) continue;
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= lv.cols()) {
      throw ShapeError("nll: target " + std::to_string(targets[i]) + " outside shape " +
                       shape_string(lv.shape()));
    }
    total -= weights[i] * lv(i, static_cast<std::size_t>(targets[i]));
  }
  const std::size_t il = logp.id();
  return g.record(Array::scalar(total / normalizer), {logp},
                  [il, t = std::vector<int>(targets.begin(), targets.end()),
                   w = std::vector<double>(weights.begin(), weights.end()),
                   normalizer](Graph& g, std::size_t self) {
                    const double dc = g.grad(self)[0];
                    Array& dl = g.grad(il);
                    for (std::size_t i = 0; i < t.size(); ++i) {
                      if (w[i] == 0.0) continue;
                      dl(i, static_cast<std::size_t>(t[i])) -= dc * w[i] / normalizer;
                    }
                  });
}

Var sum(Var a) {
  Graph& g = graph_of(a);
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  const std::size_t ia = a.id();
  return g.record(Array::scalar(total), {a}, [ia](Graph& g, std::size_t self) {
    const double dc = g.grad(self)[0];
    for (double& v : g.grad(ia).values()) v += dc;
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var row_blend(std::span<const double> mask, Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same("row_blend", a.value(), b.value());
  const Array& av = a.value();
  const Array& bv = b.value();
  if (mask.size() != av.rows()) {
    throw ShapeError("row_blend: " + std::to_string(mask.size()) + " mask entries for shape " +
                     shape_string(av.shape()));
  }
  Array out(av.shape());
  const std::size_t n = av.cols();
  for (std::size_t r = 0; r < av.rows(); ++r) {
    const double m = mask[r];
    for (std::size_t j = 0; j < n; ++j) out(r, j) = m * av(r, j) + (1.0 - m) * bv(r, j);
  }
  const std::size_t ia = a.id(), ib = b.id();
  return g.record(std::move(out), {a, b},
                  [ia, ib, m = std::vector<double>(mask.begin(), mask.end())](Graph& g,
                                                                              std::size_t self) {
                    const Array& dc = g.grad(self);
                    const std::size_t n = dc.cols();
                    if (g.requires_grad(ia)) {
                      Array& da = g.grad(ia);
                      for (std::size_t r = 0; r < dc.rows(); ++r) {
                        if (m[r] == 0.0) continue;
                        for (std::size_t j = 0; j < n; ++j) da(r, j) += m[r] * dc(r, j);
                      }
                    }
                    if (g.requires_grad(ib)) {
                      Array& db = g.grad(ib);
                      for (std::size_t r = 0; r < dc.rows(); ++r) {
                        if (m[r] == 1.0) continue;
                        for (std::size_t j = 0; j < n; ++j) db(r, j) += (1.0 - m[r]) * dc(r, j);
                      }
                    }
                  });
}

Var repeat_rows(Var a, std::size_t times) {
  Graph& g = graph_of(a);
  const Array& av = a.value();
  const std::size_t rows = av.rows(), d = av.cols();
  Array out(rows * times, d);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < times; ++j) {
      std::copy_n(av.data() + r * d, d, out.data() + (r * times + j) * d);
    }
  }
  const std::size_t ia = a.id();
  return g.record(std::move(out), {a}, [ia, rows, times, d](Graph& g, std::size_t self) {
    const Array& dc = g.grad(self);
    Array& da = g.grad(ia);
    for (std::size_t r = 0; r < rows; ++r) {
      double* dst = da.data() + r * d;
      for (std::size_t j = 0; j < times; ++j) {
        const double* src = dc.data() + (r * times + j) * d;
        for (std::size_t k = 0; k < d; ++k) dst[k] += src[k];
      }
    }
  });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  Graph& g = graph_of(a);
  Array out = a.value();
  out.reshape({rows, cols});
  const std::size_t ia = a.id();
  return g.record(std::move(out), {a}, [ia](Graph& g, std::size_t self) {
    const Array& dc = g.grad(self);
    Array& da = g.grad(ia);
    for (std::size_t i = 0; i < dc.size(); ++i) da[i] += dc[i];
  });
}

Var weighted_rows(Var alpha, Var values) {
  Graph& g = graph_of(alpha, values);
  const Array& al = alpha.value();
  const Array& vv = values.value();
  const std::size_t batch = al.rows(), steps = al.cols(), d = vv.cols();
  if (vv.rows() != batch * steps) {
    throw ShapeError("weighted_rows: shape mismatch " + shape_string(al.shape()) + " vs " +
                     shape_string(vv.shape()));
  }
  Array out(batch, d);
  for (std::size_t b = 0; b < batch; ++b) {
    double* o = out.data() + b * d;
    for (std::size_t t = 0; t < steps; ++t) {
      const double w = al(b, t);
      if (w == 0.0) continue;
      const double* v = vv.data() + (b * steps + t) * d;
      for (std::size_t k = 0; k < d; ++k) o[k] += w * v[k];
    }
  }
  const std::size_t ia = alpha.id(), iv = values.id();
  return g.record(std::move(out), {alpha, values},
                  [ia, iv, batch, steps, d](Graph& g, std::size_t self) {
                    const Array& dc = g.grad(self);
                    if (g.requires_grad(ia)) {
                      Array& da = g.grad(ia);
                      const Array& vv = g.value(iv);
                      for (std::size_t b = 0; b < batch; ++b) {
                        const double* go = dc.data() + b * d;
                        for (std::size_t t = 0; t < steps; ++t) {
                          const double* v = vv.data() + (b * steps + t) * d;
                          double dot = 0.0;
                          for (std::size_t k = 0; k < d; ++k) dot += go[k] * v[k];
                          da(b, t) += dot;
                        }
                      }
                    }
                    if (g.requires_grad(iv)) {
                      Array& dv = g.grad(iv);
                      const Array& al = g.value(ia);
                      for (std::size_t b = 0; b < batch; ++b) {
                        const double* go = dc.data() + b * d;
                        for (std::size_t t = 0; t < steps; ++t) {
                          const double w = al(b, t);
                          if (w == 0.0) continue;
                          double* v = dv.data() + (b * steps + t) * d;
                          for (std::size_t k = 0; k < d; ++k) v[k] += w * go[k];
                        }
                      }
                    }
                  });
}

Var stack_steps(std::span<const Var> steps) {
  if (steps.empty()) throw ShapeError("stack_steps: no inputs");
  Graph& g = graph_of(steps[0]);
  const std::size_t batch = steps[0].rows(), d = steps[0].cols(), count = steps.size();
  std::vector<std::size_t> ids;
  Array out(batch * count, d);
  for (std::size_t t = 0; t < count; ++t) {
    const Array& sv = steps[t].value();
    if (sv.rows() != batch || sv.cols() != d) {
      throw ShapeError("stack_steps: shape mismatch " + shape_string(steps[0].value().shape()) +
                       " vs " + shape_string(sv.shape()));
    }
    ids.push_back(steps[t].id());
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy_n(sv.data() + b * d, d, out.data() + (b * count + t) * d);
    }
  }
  return g.record(std::move(out), steps,
                  [ids = std::move(ids), batch, d](Graph& g, std::size_t self) {
                    const Array& dc = g.grad(self);
                    const std::size_t count = ids.size();
                    for (std::size_t t = 0; t < count; ++t) {
                      if (!g.requires_grad(ids[t])) continue;
                      Array& ds = g.grad(ids[t]);
                      for (std::size_t b = 0; b < batch; ++b) {
                        const double* src = dc.data() + (b * count + t) * d;
                        double* dst = ds.data() + b * d;
                        for (std::size_t k = 0; k < d; ++k) dst[k] += src[k];
                      }
                    }
                  });
}

Var dropout(Var a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw std::invalid_argument("dropout rate must be below 1");
  const Array& av = a.value();
  Array keep(av.shape(), 0.0);
  const double inv = 1.0 / (1.0 - rate);
  for (double& k : keep.values()) k = rng.uniform() < rate ? 0.0 : inv;
  return mul_const(a, keep);
}

Var binary_cross_entropy(Var prob, std::span<const double> labels) {
  Graph& g = graph_of(prob);
  const Array& pv = prob.value();
  if (pv.cols() != 1 || pv.rows() != labels.size()) {
    throw ShapeError("binary_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for probabilities of shape " + shape_string(pv.shape()));
  }
  const double m = static_cast<double>(labels.size());
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(pv[i], kLogFloor, 1.0 - kLogFloor);
    total -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  const std::size_t ip = prob.id();
  return g.record(Array::scalar(total / m), {prob},
                  [ip, y = std::vector<double>(labels.begin(), labels.end()), m](Graph& g,
                                                                                 std::size_t self) {
                    const double dc = g.grad(self)[0];
                    const Array& pv = g.value(ip);
                    Array& dp = g.grad(ip);
                    for (std::size_t i = 0; i < y.size(); ++i) {
                      const double p = pv[i];
                      if (p <= kLogFloor || p >= 1.0 - kLogFloor) continue;
                      dp[i] -= dc * (y[i] / p - (1.0 - y[i]) / (1.0 - p)) / m;
                    }
                  });
}

Var detach(Var a) { return graph_of(a).constant(a.value()); }

// ---- gradient checking -----------------------------------------------------

GradCheckResult grad_check(const std::function<Var(Graph&)>& loss,
                           std::span<Parameter* const> params, double h) {
  for (Parameter* p : params) p->zero_grad();
  {
    Graph g;
    Var l = loss(g);
    if (!std::isfinite(l.item())) throw NonFiniteError("grad_check: non-finite loss");
    g.backward(l);
  }
  auto evaluate = [&loss]() {
    Graph g(false);
    const double v = loss(g).item();
    if (!std::isfinite(v)) throw NonFiniteError("grad_check: non-finite perturbed loss");
    return v;
  };
  GradCheckResult result;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double original = p->value[i];
      p->value[i] = original + h;
      const double up = evaluate();
      p->value[i] = original - h;
      const double down = evaluate();
      p->value[i] = original;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p->grad[i];
      if (!std::isfinite(analytic)) throw NonFiniteError("grad_check: non-finite gradient");
      const double rel = std::abs(analytic - numeric) /
                         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      ++result.coordinates;
      if (rel > result.max_rel_error || result.worst_parameter.empty()) {
        result.max_rel_error = rel;
        result.worst_parameter = p->name;
        result.worst_index = i;
        result.analytic = analytic;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace crossaug::ad
