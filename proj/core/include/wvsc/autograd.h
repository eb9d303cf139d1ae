#pragma once

// Minimal tape-free reverse-mode automatic differentiation over Tensor.
//
// Every operation returns a Var that owns its value and, when any input
// requires a gradient, a closure that pushes the output gradient back into
// its inputs. `backward(loss)` walks the graph in reverse topological order.
// Graphs are rebuilt on every forward pass and freed with the last Var.

#include <functional>
#include <memory>
#include <vector>

#include "wvsc/tensor.h"

namespace wvsc::ad {

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily, same shape as value
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward_fn;

  Tensor& grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  // Only legal on leaves (parameters); used by optimizers and checkpoint loads.
  Tensor& mutable_value() { return node_->value; }
  const std::vector<int>& shape() const { return node_->value.shape(); }
  int dim(int axis) const { return node_->value.dim(axis); }
  size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  // Gradient accumulated by backward(); a zero tensor if none reached this node.
  Tensor grad() const;
  void zero_grad();

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

// Seeds d(loss)/d(loss) = 1 for a single-element `loss` and accumulates into
// every reachable node that requires a gradient.
void backward(const Var& loss);

// Builds a result node; the closure is dropped when no parent needs a gradient.
Var make_result(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn);

Var constant(Tensor value);

// While alive, results record no graph (inference).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// ---- elementwise -----------------------------------------------------------
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
// a * s where s is a single-element Var (learnable scalar).
Var scale_by(const Var& a, const Var& s);
Var leaky_relu(const Var& a, double slope);

// ---- structural ------------------------------------------------------------
Var reshape(const Var& a, std::vector<int> shape);
Var concat(const std::vector<Var>& parts, int axis);
Var slice(const Var& a, int axis, int start, int length);
// Zero-extends `axis` to `length` (appended zeros).
Var pad_to(const Var& a, int axis, int length);
Var transpose2d(const Var& a);
// out[i] = a[index[i]]; the backward pass scatter-adds.
Var gather(const Var& a, std::vector<int> index, std::vector<int> out_shape);
// a: (k*T, d) -> (T, d), averaging the k consecutive row blocks.
Var block_mean(const Var& a, int blocks);

// ---- linear algebra ---------------------------------------------------------
Var matmul(const Var& a, const Var& b);
// a: (T, d), bias: (d) broadcast over rows.
Var add_rows(const Var& a, const Var& bias);
Var softmax_rows(const Var& a);

// ---- convolution -------------------------------------------------------------
// x: (C, H, W), w: (O, C, k, k), b: (O) or undefined. Zero padding.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
// Nearest-neighbour x2 upsampling of a (C, H, W) map.
Var upsample2x(const Var& x);

// ---- reductions ----------------------------------------------------------------
Var sum(const Var& a);
// Mean squared difference over all elements; returns a {1} tensor.
Var mse(const Var& a, const Var& b);

}  // namespace wvsc::ad
