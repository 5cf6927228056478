#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gstam/tensor.hpp"

namespace gstam {

// A trainable tensor together with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  // Accumulated by Graph::backward even through const access; inference
  // never touches it.
  mutable Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() const { grad.fill(0.0); }
};

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  const Tensor& value() const;
  const Tensor& grad() const;
  Graph& graph() const { return *graph_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Tape for reverse-mode differentiation, rebuilt for every forward pass.
//
// backward() zeroes every node gradient, seeds the root and runs the tape in
// reverse. Gradients reaching trainable leaves are *added* to the bound
// Parameter::grad, so running backward twice without zeroing parameters
// yields exactly twice the gradient.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  // Leaf whose gradient is kept on the node (readable via Var::grad()).
  Var input(Tensor value);
  // Leaf bound to a parameter; the value is referenced, not copied.
  Var trainable(const Parameter& p);
  // Parameter value used as a constant (inference).
  Var frozen(const Parameter& p);

  void backward(Var root, double seed = 1.0);

  std::size_t size() const noexcept { return nodes_.size(); }

  // Op-implementation interface.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);
  Var record(Tensor value, std::span<const Var> parents, BackwardFn fn);
  const Tensor& value(std::size_t id) const;
  Tensor& grad(std::size_t id) { return nodes_[id].grad; }
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  bool needs_grad(std::size_t id) const noexcept { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Tensor value;
    const Tensor* ref = nullptr;
    Tensor grad;
    BackwardFn backward;
    const Parameter* sink = nullptr;
    bool requires_grad = false;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
};

// Differentiable primitives. Shapes follow Tensor conventions: vectors are
// (n,1) matrices.
namespace ad {

Var matvec(Var m, Var v);
// Temporal convolution with "same" zero padding of (k-1)/2 on both ends.
// x: c_in x T, kernels: c_out x (c_in * k) laid out as [o][i * k + j],
// bias: vector c_out. k must be odd.
Var conv1d_same(Var x, Var kernels, Var bias, std::size_t k);
Var relu(Var x);
Var sigmoid(Var x);
// Softmax over every entry of a vector.
Var softmax(Var x);
// -log(p[label] + kLogEpsilon) for a probability vector p.
Var cross_entropy(Var p, std::size_t label);
Var mul(Var a, Var b);
Var add(Var a, Var b);
Var scale(Var a, double factor);
Var sum(std::span<const Var> terms);
// Reshape to an (n,1) vector.
Var as_vector(Var x);
// Stack equal-length vectors as rows of a matrix.
Var stack_rows(std::span<const Var> rows);
// Sum of absolute values; subgradient 0 at 0.
Var l1_norm(Var x);
// sum_t sum_k weights[k] * || x[groups[k], t] ||_2 for a matrix x. The
// gradient of a group norm below kNormGuard is taken to be 0.
Var group_l2(Var x, std::span<const std::vector<std::size_t>> groups,
             std::span<const double> weights);

inline constexpr double kLogEpsilon = 1e-12;
inline constexpr double kNormGuard = 1e-12;

}  // namespace ad

// Plain-tensor versions of the nonlinearities.
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softmax(const Tensor& x);
double cross_entropy(const Tensor& p, std::size_t label);
Tensor matvec(const Tensor& m, const Tensor& v);
Tensor conv1d_same(const Tensor& x, const Tensor& kernels, const Tensor& bias, std::size_t k);

}  // namespace gstam
