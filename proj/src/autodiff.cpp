#include "gstam/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gstam/errors.hpp"

namespace gstam {

namespace {

void require_same_graph(const Var& a, const Var& b) {
  if (&a.graph() != &b.graph()) throw ContractError("operands belong to different graphs");
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) {
    const double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

void check_matvec(const Tensor& m, const Tensor& v) {
  if (!v.is_vector() || m.cols() != v.rows()) {
    throw DimensionError("matvec: matrix " + m.shape_string() + " times " + v.shape_string());
  }
}

void check_conv(const Tensor& x, const Tensor& kernels, const Tensor& bias, std::size_t k) {
  if (k % 2 == 0) throw ConfigError("conv1d: kernel size must be odd, got " + std::to_string(k));
  if (x.cols() == 0) throw DimensionError("conv1d: empty temporal axis");
  if (kernels.cols() != x.rows() * k) {
    throw DimensionError("conv1d: kernels " + kernels.shape_string() + " do not match " +
                         std::to_string(x.rows()) + " input channels with k=" +
                         std::to_string(k));
  }
  if (!bias.is_vector() || bias.rows() != kernels.rows()) {
    throw DimensionError("conv1d: bias " + bias.shape_string() + " for " +
                         std::to_string(kernels.rows()) + " output channels");
  }
}

void check_label(const Tensor& p, std::size_t label) {
  if (!p.is_vector()) throw DimensionError("cross_entropy: expected a vector, got " + p.shape_string());
  if (label >= p.rows()) {
    throw LabelError("cross_entropy: label " + std::to_string(label) + " out of range for " +
                     std::to_string(p.rows()) + " classes");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Plain kernels

Tensor matvec(const Tensor& m, const Tensor& v) {
  check_matvec(m, v);
  Tensor out = Tensor::vector(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) acc += m(r, c) * v[c];
    out[r] = acc;
  }
  return out;
}

Tensor conv1d_same(const Tensor& x, const Tensor& kernels, const Tensor& bias, std::size_t k) {
  check_conv(x, kernels, bias, k);
  const std::size_t c_in = x.rows();
  const std::size_t c_out = kernels.rows();
  const std::size_t len = x.cols();
  const auto pad = static_cast<std::ptrdiff_t>((k - 1) / 2);
  Tensor out(c_out, len);
  for (std::size_t o = 0; o < c_out; ++o) {
    double* out_row = out.row_ptr(o);
    std::fill(out_row, out_row + len, bias[o]);
    for (std::size_t i = 0; i < c_in; ++i) {
      const double* in_row = x.row_ptr(i);
      for (std::size_t j = 0; j < k; ++j) {
        const double w = kernels(o, i * k + j);
        if (w == 0.0) continue;
        const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - pad;
        const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -shift);
        const std::ptrdiff_t t1 =
            std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(len),
                                     static_cast<std::ptrdiff_t>(len) - shift);
        for (std::ptrdiff_t t = t0; t < t1; ++t) out_row[t] += w * in_row[t + shift];
      }
    }
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values()) v = sigmoid_scalar(v);
  return out;
}

Tensor softmax(const Tensor& x) {
  if (x.size() == 0) throw DimensionError("softmax: empty input");
  Tensor out = x;
  auto vals = out.values();
  const double peak = *std::max_element(vals.begin(), vals.end());
  double total = 0.0;
  for (double& v : vals) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : vals) v /= total;
  return out;
}

double cross_entropy(const Tensor& p, std::size_t label) {
  check_label(p, label);
  double total = 0.0;
  for (double v : p.values()) {
    if (v < -1e-9) throw ContractError("cross_entropy: negative probability");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ContractError("cross_entropy: input is not on the simplex");
  return -std::log(p[label] + ad::kLogEpsilon);
}

// ---------------------------------------------------------------------------
// Graph

const Tensor& Var::value() const { return graph_->value(id_); }
const Tensor& Var::grad() const { return graph_->grad(id_); }

const Tensor& Graph::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.ref != nullptr ? *n.ref : n.value;
}

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::input(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Graph::trainable(const Parameter& p) {
  if (!p.grad.same_shape(p.value)) p.grad = Tensor(p.value.rows(), p.value.cols());
  Node n;
  n.ref = &p.value;
  n.sink = &p;
  n.requires_grad = true;
  return push(std::move(n));
}

Var Graph::frozen(const Parameter& p) {
  Node n;
  n.ref = &p.value;
  return push(std::move(n));
}

Var Graph::record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(fn));
}

Var Graph::record(Tensor value, std::span<const Var> parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (const Var& p : parents) {
    if (&p.graph() != this) throw ContractError("operand belongs to a different graph");
    n.requires_grad = n.requires_grad || nodes_[p.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

void Graph::backward(Var root, double seed) {
  if (&root.graph() != this) throw ContractError("backward: root belongs to a different graph");
  if (!value(root.id()).is_scalar()) {
    throw ContractError("backward: root must be scalar, got " + value(root.id()).shape_string());
  }
  for (Node& n : nodes_) {
    const Tensor& v = n.ref != nullptr ? *n.ref : n.value;
    if (n.requires_grad) {
      if (n.grad.same_shape(v)) {
        n.grad.fill(0.0);
      } else {
        n.grad = Tensor(v.rows(), v.cols());
      }
    }
  }
  if (!nodes_[root.id()].requires_grad) return;
  nodes_[root.id()].grad[0] = seed;
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad) continue;
    if (n.backward) n.backward(*this, id);
    if (n.sink != nullptr) {
      auto dst = n.sink->grad.values();
      auto src = n.grad.values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
}

// ---------------------------------------------------------------------------
// Differentiable ops

namespace ad {

Var matvec(Var m, Var v) {
  require_same_graph(m, v);
  Graph& g = m.graph();
  const std::size_t mid = m.id();
  const std::size_t vid = v.id();
  return g.record(gstam::matvec(m.value(), v.value()), {m, v}, [mid, vid](Graph& g, std::size_t self) {
    const Tensor& dout = g.grad(self);
    const Tensor& mv = g.value(mid);
    const Tensor& vv = g.value(vid);
    if (g.needs_grad(mid)) {
      Tensor& dm = g.grad(mid);
      for (std::size_t r = 0; r < mv.rows(); ++r)
        for (std::size_t c = 0; c < mv.cols(); ++c) dm(r, c) += dout[r] * vv[c];
    }
    if (g.needs_grad(vid)) {
      Tensor& dv = g.grad(vid);
      for (std::size_t r = 0; r < mv.rows(); ++r)
        for (std::size_t c = 0; c < mv.cols(); ++c) dv[c] += dout[r] * mv(r, c);
    }
  });
}

Var conv1d_same(Var x, Var kernels, Var bias, std::size_t k) {
  require_same_graph(x, kernels);
  require_same_graph(x, bias);
  Graph& g = x.graph();
  const std::size_t xid = x.id();
  const std::size_t kid = kernels.id();
  const std::size_t bid = bias.id();
  Tensor out = gstam::conv1d_same(x.value(), kernels.value(), bias.value(), k);
  return g.record(std::move(out), {x, kernels, bias}, [xid, kid, bid, k](Graph& g, std::size_t self) {
    const Tensor& dout = g.grad(self);
    const Tensor& xv = g.value(xid);
    const Tensor& kv = g.value(kid);
    const std::size_t c_in = xv.rows();
    const std::size_t c_out = kv.rows();
    const std::size_t len = xv.cols();
    const auto pad = static_cast<std::ptrdiff_t>((k - 1) / 2);
    const bool want_x = g.needs_grad(xid);
    const bool want_k = g.needs_grad(kid);
    if (g.needs_grad(bid)) {
      Tensor& db = g.grad(bid);
      for (std::size_t o = 0; o < c_out; ++o) {
        const double* drow = dout.row_ptr(o);
        db[o] += std::accumulate(drow, drow + len, 0.0);
      }
    }
    if (!want_x && !want_k) return;
    for (std::size_t o = 0; o < c_out; ++o) {
      const double* drow = dout.row_ptr(o);
      for (std::size_t i = 0; i < c_in; ++i) {
        const double* in_row = xv.row_ptr(i);
        for (std::size_t j = 0; j < k; ++j) {
          const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - pad;
          const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -shift);
          const std::ptrdiff_t t1 =
              std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(len),
                                       static_cast<std::ptrdiff_t>(len) - shift);
          if (want_k) {
            double acc = 0.0;
            for (std::ptrdiff_t t = t0; t < t1; ++t) acc += drow[t] * in_row[t + shift];
            g.grad(kid)(o, i * k + j) += acc;
          }
          if (want_x) {
            const double w = kv(o, i * k + j);
            double* dx_row = g.grad(xid).row_ptr(i);
            for (std::ptrdiff_t t = t0; t < t1; ++t) dx_row[t + shift] += w * drow[t];
          }
        }
      }
    }
  });
}

Var relu(Var x) {
  Graph& g = x.graph();
  const std::size_t xid = x.id();
  return g.record(gstam::relu(x.value()), {x}, [xid](Graph& g, std::size_t self) {
    const Tensor& dout = g.grad(self);
    const Tensor& xv = g.value(xid);
    Tensor& dx = g.grad(xid);
    for (std::size_t i = 0; i < xv.size(); ++i)
      if (xv[i] > 0.0) dx[i] += dout[i];
  });
}

Var sigmoid(Var x) {
  Graph& g = x.graph();
  const std::size_t xid = x.id();
  return g.record(gstam::sigmoid(x.value()), {x}, [xid](Graph& g, std::size_t self) {
    const Tensor& dout = g.grad(self);
    const Tensor& y = g.value(self);
    Tensor& dx = g.grad(xid);
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] += dout[i] * y[i] * (1.0 - y[i]);
  });
}

Var softmax(Var x) {
  Graph& g = x.graph();
  const std::size_t xid = x.id();
  return g.record(gstam::softmax(x.value()), {x}, [xid](Graph& g, std::size_t self) {
    const Tensor& dout = g.grad(self);
    const Tensor& y = g.value(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += dout[i] * y[i];
    Tensor& dx = g.grad(xid);
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] += y[i] * (dout[i] - dot);
  });
}

Var cross_entropy(Var p, std::size_t label) {
  check_label(p.value(), label);
  Graph& g = p.graph();
  const std::size_t pid = p.id();
  const double loss = -std::log(p.value()[label] + kLogEpsilon);
  return g.record(Tensor(1, 1, loss), {p}, [pid, label](Graph& g, std::size_t self) {
    const double d = g.grad(self)[0];
    g.grad(pid)[label] -= d / (g.value(pid)[label] + kLogEpsilon);
  });
}

Var mul(Var a, Var b) {
  require_same_graph(a, b);
  if (!a.value().same_shape(b.value())) {
    throw DimensionError("mul: " + a.value().shape_string() + " vs " + b.value().shape_string());
  }
  Graph& g = a.graph();
  const std::size_t aid = a.id();
  const std::size_t bid = b.id();
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return g.record(std::move(out), {a, b}, [aid, bid](Graph& g, std::size_t self) {
    const Tensor& dout = g.grad(self);
    const Tensor& av = g.value(aid);
    const Tensor& bv = g.value(bid);
    if (g.needs_grad(aid))
      for (std::size_t i = 0; i < dout.size(); ++i) g.grad(aid)[i] += dout[i] * bv[i];
    if (g.needs_grad(bid))
      for (std::size_t i = 0; i < dout.size(); ++i) g.grad(bid)[i] += dout[i] * av[i];
  });
}

Var add(Var a, Var b) {
  const std::array<Var, 2> terms{a, b};
  return sum(terms);
}

Var scale(Var a, double factor) {
  Graph& g = a.graph();
  const std::size_t aid = a.id();
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  return g.record(std::move(out), {a}, [aid, factor](Graph& g, std::size_t self) {
    const Tensor& dout = g.grad(self);
    Tensor& da = g.grad(aid);
    for (std::size_t i = 0; i < dout.size(); ++i) da[i] += factor * dout[i];
  });
}

Var sum(std::span<const Var> terms) {
  if (terms.empty()) throw DimensionError("sum: no terms");
  Graph& g = terms.front().graph();
  Tensor out = terms.front().value();
  for (std::size_t k = 1; k < terms.size(); ++k) {
    const Tensor& v = terms[k].value();
    if (!v.same_shape(out)) {
      throw DimensionError("sum: " + out.shape_string() + " vs " + v.shape_string());
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  }
  std::vector<std::size_t> ids;
  ids.reserve(terms.size());
  for (const Var& t : terms) ids.push_back(t.id());
  return g.record(std::move(out), terms, [ids = std::move(ids)](Graph& g, std::size_t self) {
    const Tensor& dout = g.grad(self);
    for (std::size_t id : ids) {
      if (!g.needs_grad(id)) continue;
      Tensor& d = g.grad(id);
      for (std::size_t i = 0; i < dout.size(); ++i) d[i] += dout[i];
    }
  });
}

Var as_vector(Var x) {
  Graph& g = x.graph();
  const std::size_t xid = x.id();
  Tensor out = Tensor::vector(std::vector<double>(x.value().values().begin(), x.value().values().end()));
  return g.record(std::move(out), {x}, [xid](Graph& g, std::size_t self) {
    const Tensor& dout = g.grad(self);
    Tensor& dx = g.grad(xid);
    for (std::size_t i = 0; i < dout.size(); ++i) dx[i] += dout[i];
  });
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no rows");
  Graph& g = rows.front().graph();
  const std::size_t len = rows.front().value().size();
  Tensor out(rows.size(), len);
  std::vector<std::size_t> ids;
  ids.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Tensor& v = rows[r].value();
    if (v.size() != len) throw DimensionError("stack_rows: rows of unequal length");
    std::copy(v.values().begin(), v.values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(r * len));
    ids.push_back(rows[r].id());
  }
  return g.record(std::move(out), rows, [ids = std::move(ids), len](Graph& g, std::size_t self) {
    const Tensor& dout = g.grad(self);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      if (!g.needs_grad(ids[r])) continue;
      Tensor& d = g.grad(ids[r]);
      for (std::size_t i = 0; i < len; ++i) d[i] += dout[r * len + i];
    }
  });
}

Var l1_norm(Var x) {
  Graph& g = x.graph();
  const std::size_t xid = x.id();
  double total = 0.0;
  for (double v : x.value().values()) total += std::abs(v);
  return g.record(Tensor(1, 1, total), {x}, [xid](Graph& g, std::size_t self) {
    const double d = g.grad(self)[0];
    const Tensor& xv = g.value(xid);
    Tensor& dx = g.grad(xid);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      if (xv[i] > 0.0) dx[i] += d;
      else if (xv[i] < 0.0) dx[i] -= d;
    }
  });
}

Var group_l2(Var x, std::span<const std::vector<std::size_t>> groups, std::span<const double> weights) {
  if (groups.size() != weights.size()) throw ConfigError("group_l2: one weight per group required");
  const Tensor& xv = x.value();
  for (const auto& members : groups)
    for (std::size_t r : members)
      if (r >= xv.rows()) {
        throw ConfigError("group_l2: group member " + std::to_string(r) + " outside " +
                          std::to_string(xv.rows()) + " rows");
      }
  const std::size_t len = xv.cols();
  // norms[k * len + t] = || x[groups[k], t] ||
  std::vector<double> norms(groups.size() * len, 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    for (std::size_t t = 0; t < len; ++t) {
      double sq = 0.0;
      for (std::size_t r : groups[k]) sq += xv(r, t) * xv(r, t);
      norms[k * len + t] = std::sqrt(sq);
      total += weights[k] * norms[k * len + t];
    }
  }
  Graph& g = x.graph();
  const std::size_t xid = x.id();
  std::vector<std::vector<std::size_t>> grp(groups.begin(), groups.end());
  std::vector<double> w(weights.begin(), weights.end());
  return g.record(Tensor(1, 1, total), {x},
                  [xid, grp = std::move(grp), w = std::move(w), norms = std::move(norms), len](
                      Graph& g, std::size_t self) {
                    const double d = g.grad(self)[0];
                    const Tensor& xv = g.value(xid);
                    Tensor& dx = g.grad(xid);
                    for (std::size_t k = 0; k < grp.size(); ++k) {
                      for (std::size_t t = 0; t < len; ++t) {
                        const double n = norms[k * len + t];
                        if (n < kNormGuard) continue;
                        const double f = d * w[k] / n;
                        for (std::size_t r : grp[k]) dx(r, t) += f * xv(r, t);
                      }
                    }
                  });
}

}  // namespace ad
}  // namespace gstam
