#include "wvsc/autograd.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "wvsc/errors.h"

namespace wvsc::ad {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMajor>;
using ConstMatMap = Eigen::Map<const RowMajor>;

// Adds `g` into parent `i`'s gradient when that parent participates.
void push(Node& self, size_t i, const Tensor& g) {
  Node& p = *self.parents[i];
  if (!p.requires_grad) return;
  Tensor& buf = p.grad_buffer();
  double* dst = buf.data();
  const double* src = g.data();
  for (size_t k = 0; k < buf.size(); ++k) dst[k] += src[k];
}

Node& parent(Node& self, size_t i) { return *self.parents[i]; }

struct AxisSplit {
  size_t outer = 1;
  size_t extent = 1;
  size_t inner = 1;
};

AxisSplit split_axis(const std::vector<int>& shape, int axis) {
  if (axis < 0 || axis >= static_cast<int>(shape.size())) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape));
  }
  AxisSplit s;
  for (int i = 0; i < axis; ++i) s.outer *= static_cast<size_t>(shape[i]);
  s.extent = static_cast<size_t>(shape[axis]);
  for (size_t i = static_cast<size_t>(axis) + 1; i < shape.size(); ++i) {
    s.inner *= static_cast<size_t>(shape[i]);
  }
  return s;
}

}  // namespace

Tensor& Node::grad_buffer() {
  if (grad.size() != value.size()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Tensor Var::grad() const {
  if (node_->grad.size() == node_->value.size()) return node_->grad;
  return Tensor(node_->value.shape(), 0.0);
}

void Var::zero_grad() {
  if (node_) node_->grad = Tensor();
}

Var constant(Tensor value) { return Var(std::move(value), false); }

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Var make_result(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs = g_grad_enabled && std::any_of(parents.begin(), parents.end(),
                           [](const Var& p) { return p.requires_grad(); });
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node());
    node->backward_fn = std::move(backward_fn);
  }
  return Var(std::move(node));
}

void backward(const Var& loss) {
  if (loss.size() != 1) throw ShapeError("backward() needs a single-element loss");
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack{{loss.node().get(), 0}};
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !visited.contains(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad.size() == n->value.size()) n->backward_fn(*n);
  }
  // Interior gradients are not needed after the sweep.
  for (Node* n : order) {
    if (!n->parents.empty()) n->grad = Tensor();
  }
}

// ---- elementwise -----------------------------------------------------------

Var add(const Var& a, const Var& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor out = a.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    push(self, 0, self.grad);
    push(self, 1, self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  Tensor out = a.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    push(self, 0, self.grad);
    Tensor neg = self.grad;
    for (auto& v : neg.values()) v = -v;
    push(self, 1, neg);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  Tensor out = a.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    const Tensor& av = parent(self, 0).value;
    const Tensor& bv = parent(self, 1).value;
    Tensor ga = self.grad, gb = self.grad;
    for (size_t i = 0; i < ga.size(); ++i) {
      ga[i] *= bv[i];
      gb[i] *= av[i];
    }
    push(self, 0, ga);
    push(self, 1, gb);
  });
}

Var scale(const Var& a, double s) {
  Tensor out = a.value();
  for (auto& v : out.values()) v *= s;
  return make_result(std::move(out), {a}, [s](Node& self) {
    Tensor g = self.grad;
    for (auto& v : g.values()) v *= s;
    push(self, 0, g);
  });
}

Var scale_by(const Var& a, const Var& s) {
  if (s.size() != 1) throw ShapeError("scale_by expects a single-element scale");
  const double sv = s.value()[0];
  Tensor out = a.value();
  for (auto& v : out.values()) v *= sv;
  return make_result(std::move(out), {a, s}, [](Node& self) {
    const Tensor& av = parent(self, 0).value;
    const double sv = parent(self, 1).value[0];
    Tensor ga = self.grad;
    double gs = 0.0;
    for (size_t i = 0; i < ga.size(); ++i) {
      gs += ga[i] * av[i];
      ga[i] *= sv;
    }
    push(self, 0, ga);
    push(self, 1, Tensor::scalar(gs));
  });
}

Var leaky_relu(const Var& a, double slope) {
  Tensor out = a.value();
  for (auto& v : out.values()) v = v > 0.0 ? v : v * slope;
  return make_result(std::move(out), {a}, [slope](Node& self) {
    const Tensor& av = parent(self, 0).value;
    Tensor g = self.grad;
    for (size_t i = 0; i < g.size(); ++i) {
      if (!(av[i] > 0.0)) g[i] *= slope;
    }
    push(self, 0, g);
  });
}

// ---- structural ------------------------------------------------------------

Var reshape(const Var& a, std::vector<int> shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return make_result(std::move(out), {a}, [](Node& self) {
    push(self, 0, self.grad.reshaped(parent(self, 0).value.shape()));
  });
}

Var concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  std::vector<int> shape = parts[0].shape();
  int total = 0;
  for (const auto& p : parts) {
    if (p.value().rank() != static_cast<int>(shape.size())) {
      throw ShapeError("concat rank mismatch");
    }
    for (int d = 0; d < p.value().rank(); ++d) {
      if (d != axis && p.dim(d) != shape[static_cast<size_t>(d)]) {
        throw ShapeError("concat: shape mismatch " + shape_string(p.shape()) + " vs " +
                         shape_string(shape));
      }
    }
    total += p.dim(axis);
  }
  shape[static_cast<size_t>(axis)] = total;
  Tensor out(shape);
  const AxisSplit so = split_axis(shape, axis);
  std::vector<size_t> offsets;
  size_t offset = 0;
  for (const auto& p : parts) {
    const AxisSplit sp = split_axis(p.shape(), axis);
    offsets.push_back(offset);
    for (size_t o = 0; o < so.outer; ++o) {
      std::copy_n(p.value().data() + o * sp.extent * sp.inner, sp.extent * sp.inner,
                  out.data() + (o * so.extent + offset) * so.inner);
    }
    offset += sp.extent;
  }
  return make_result(std::move(out), parts, [axis, offsets](Node& self) {
    const AxisSplit so = split_axis(self.value.shape(), axis);
    for (size_t i = 0; i < self.parents.size(); ++i) {
      if (!self.parents[i]->requires_grad) continue;
      const auto& pshape = self.parents[i]->value.shape();
      const AxisSplit sp = split_axis(pshape, axis);
      Tensor g(pshape);
      for (size_t o = 0; o < so.outer; ++o) {
        std::copy_n(self.grad.data() + (o * so.extent + offsets[i]) * so.inner,
                    sp.extent * sp.inner, g.data() + o * sp.extent * sp.inner);
      }
      push(self, i, g);
    }
  });
}

Var slice(const Var& a, int axis, int start, int length) {
  const AxisSplit sa = split_axis(a.shape(), axis);
  if (start < 0 || length < 0 || static_cast<size_t>(start + length) > sa.extent) {
    throw ShapeError("slice [" + std::to_string(start) + ", +" + std::to_string(length) +
                     ") out of range for " + shape_string(a.shape()));
  }
  std::vector<int> shape = a.shape();
  shape[static_cast<size_t>(axis)] = length;
  Tensor out(shape);
  const size_t len = static_cast<size_t>(length);
  for (size_t o = 0; o < sa.outer; ++o) {
    std::copy_n(a.value().data() + (o * sa.extent + static_cast<size_t>(start)) * sa.inner,
                len * sa.inner, out.data() + o * len * sa.inner);
  }
  return make_result(std::move(out), {a}, [axis, start, len](Node& self) {
    const AxisSplit sa = split_axis(parent(self, 0).value.shape(), axis);
    Tensor g(parent(self, 0).value.shape());
    for (size_t o = 0; o < sa.outer; ++o) {
      std::copy_n(self.grad.data() + o * len * sa.inner, len * sa.inner,
                  g.data() + (o * sa.extent + static_cast<size_t>(start)) * sa.inner);
    }
    push(self, 0, g);
  });
}

Var pad_to(const Var& a, int axis, int length) {
  const int have = a.dim(axis);
  if (length < have) throw ShapeError("pad_to cannot shrink an axis");
  if (length == have) return a;
  std::vector<int> zshape = a.shape();
  zshape[static_cast<size_t>(axis)] = length - have;
  return concat({a, constant(Tensor(zshape, 0.0))}, axis);
}

Var transpose2d(const Var& a) {
  if (a.value().rank() != 2) throw ShapeError("transpose2d expects a matrix");
  const int r = a.dim(0), c = a.dim(1);
  Tensor out({c, r});
  MatMap(out.data(), c, r) = ConstMatMap(a.value().data(), r, c).transpose();
  return make_result(std::move(out), {a}, [r, c](Node& self) {
    Tensor g({r, c});
    MatMap(g.data(), r, c) = ConstMatMap(self.grad.data(), c, r).transpose();
    push(self, 0, g);
  });
}

Var gather(const Var& a, std::vector<int> index, std::vector<int> out_shape) {
  if (element_count(out_shape) != index.size()) {
    throw ShapeError("gather: index count does not match output shape");
  }
  Tensor out(out_shape);
  const auto n = static_cast<int>(a.size());
  for (size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= n) throw ShapeError("gather: index out of range");
    out[i] = a.value()[static_cast<size_t>(index[i])];
  }
  return make_result(std::move(out), {a}, [index = std::move(index)](Node& self) {
    Tensor g(parent(self, 0).value.shape());
    for (size_t i = 0; i < index.size(); ++i) g[static_cast<size_t>(index[i])] += self.grad[i];
    push(self, 0, g);
  });
}

Var block_mean(const Var& a, int blocks) {
  if (a.value().rank() != 2 || blocks < 1 || a.dim(0) % blocks != 0) {
    throw ShapeError("block_mean: rows of " + shape_string(a.shape()) + " not divisible by " +
                     std::to_string(blocks));
  }
  const int rows = a.dim(0) / blocks, d = a.dim(1);
  const size_t span = static_cast<size_t>(rows) * d;
  Tensor out({rows, d});
  const double w = 1.0 / blocks;
  for (int b = 0; b < blocks; ++b) {
    const double* src = a.value().data() + b * span;
    for (size_t i = 0; i < span; ++i) out[i] += w * src[i];
  }
  return make_result(std::move(out), {a}, [blocks, span, w](Node& self) {
    Tensor g(parent(self, 0).value.shape());
    for (int b = 0; b < blocks; ++b) {
      for (size_t i = 0; i < span; ++i) g[b * span + i] = w * self.grad[i];
    }
    push(self, 0, g);
  });
}

// ---- linear algebra ---------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  if (a.value().rank() != 2 || b.value().rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  MatMap(out.data(), m, n).noalias() =
      ConstMatMap(a.value().data(), m, k) * ConstMatMap(b.value().data(), k, n);
  return make_result(std::move(out), {a, b}, [m, k, n](Node& self) {
    ConstMatMap g(self.grad.data(), m, n);
    if (self.parents[0]->requires_grad) {
      Tensor ga({m, k});
      MatMap(ga.data(), m, k).noalias() =
          g * ConstMatMap(parent(self, 1).value.data(), k, n).transpose();
      push(self, 0, ga);
    }
    if (self.parents[1]->requires_grad) {
      Tensor gb({k, n});
      MatMap(gb.data(), k, n).noalias() =
          ConstMatMap(parent(self, 0).value.data(), m, k).transpose() * g;
      push(self, 1, gb);
    }
  });
}

Var add_rows(const Var& a, const Var& bias) {
  if (a.value().rank() != 2 || bias.size() != static_cast<size_t>(a.dim(1))) {
    throw ShapeError("add_rows: bias of " + shape_string(bias.shape()) + " for " +
                     shape_string(a.shape()));
  }
  const int rows = a.dim(0), d = a.dim(1);
  Tensor out = a.value();
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < d; ++j) out[static_cast<size_t>(r) * d + j] += bias.value()[j];
  }
  return make_result(std::move(out), {a, bias}, [rows, d](Node& self) {
    push(self, 0, self.grad);
    Tensor gb(parent(self, 1).value.shape());
    for (int r = 0; r < rows; ++r) {
      for (int j = 0; j < d; ++j) gb[j] += self.grad[static_cast<size_t>(r) * d + j];
    }
    push(self, 1, gb);
  });
}

Var softmax_rows(const Var& a) {
  if (a.value().rank() != 2) throw ShapeError("softmax_rows expects a matrix");
  const int rows = a.dim(0), cols = a.dim(1);
  Tensor out = a.value();
  for (int r = 0; r < rows; ++r) {
    double* row = out.data() + static_cast<size_t>(r) * cols;
    const double mx = *std::max_element(row, row + cols);
    double z = 0.0;
    for (int j = 0; j < cols; ++j) z += (row[j] = std::exp(row[j] - mx));
    for (int j = 0; j < cols; ++j) row[j] /= z;
  }
  return make_result(std::move(out), {a}, [rows, cols](Node& self) {
    Tensor g(self.value.shape());
    for (int r = 0; r < rows; ++r) {
      const size_t base = static_cast<size_t>(r) * cols;
      double dot = 0.0;
      for (int j = 0; j < cols; ++j) dot += self.grad[base + j] * self.value[base + j];
      for (int j = 0; j < cols; ++j) {
        g[base + j] = self.value[base + j] * (self.grad[base + j] - dot);
      }
    }
    push(self, 0, g);
  });
}

// ---- convolution -------------------------------------------------------------

namespace {

struct ConvGeom {
  int c, h, w, o, k, stride, pad, ho, wo;
};

void im2col(const double* x, const ConvGeom& g, double* cols) {
  const int hw = g.ho * g.wo;
  for (int c = 0; c < g.c; ++c) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        double* dst = cols + (static_cast<size_t>(c * g.k + ky) * g.k + kx) * hw;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            dst[oy * g.wo + ox] = (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w)
                                      ? x[(static_cast<size_t>(c) * g.h + iy) * g.w + ix]
                                      : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, const ConvGeom& g, double* dx) {
  const int hw = g.ho * g.wo;
  for (int c = 0; c < g.c; ++c) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const double* src = cols + (static_cast<size_t>(c * g.k + ky) * g.k + kx) * hw;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= g.h) continue;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            if (ix < 0 || ix >= g.w) continue;
            dx[(static_cast<size_t>(c) * g.h + iy) * g.w + ix] += src[oy * g.wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  if (x.value().rank() != 3 || w.value().rank() != 4 || w.dim(1) != x.dim(0) ||
      w.dim(2) != w.dim(3)) {
    throw ShapeError("conv2d: input " + shape_string(x.shape()) + " vs kernel " +
                     shape_string(w.shape()));
  }
  ConvGeom g{x.dim(0), x.dim(1), x.dim(2), w.dim(0), w.dim(2), stride, pad, 0, 0};
  g.ho = (g.h + 2 * pad - g.k) / stride + 1;
  g.wo = (g.w + 2 * pad - g.k) / stride + 1;
  if (g.ho <= 0 || g.wo <= 0) throw ShapeError("conv2d: empty output");
  const bool has_bias = b.defined();
  if (has_bias && b.size() != static_cast<size_t>(g.o)) throw ShapeError("conv2d: bias size");

  const int ckk = g.c * g.k * g.k, hw = g.ho * g.wo;
  const bool pointwise = g.k == 1 && stride == 1 && pad == 0;
  auto cols = std::make_shared<std::vector<double>>();
  const double* colp = x.value().data();
  if (!pointwise) {
    cols->resize(static_cast<size_t>(ckk) * hw);
    im2col(x.value().data(), g, cols->data());
    colp = cols->data();
  }
  Tensor out({g.o, g.ho, g.wo});
  MatMap om(out.data(), g.o, hw);
  om.noalias() = ConstMatMap(w.value().data(), g.o, ckk) * ConstMatMap(colp, ckk, hw);
  if (has_bias) {
    for (int o = 0; o < g.o; ++o) om.row(o).array() += b.value()[o];
  }

  std::vector<Var> parents{x, w};
  if (has_bias) parents.push_back(b);
  return make_result(std::move(out), std::move(parents), [g, cols, pointwise](Node& self) {
    const int ckk = g.c * g.k * g.k, hw = g.ho * g.wo;
    ConstMatMap gout(self.grad.data(), g.o, hw);
    const double* colp = pointwise ? parent(self, 0).value.data() : cols->data();
    if (self.parents[1]->requires_grad) {
      Tensor gw(parent(self, 1).value.shape());
      MatMap(gw.data(), g.o, ckk).noalias() = gout * ConstMatMap(colp, ckk, hw).transpose();
      push(self, 1, gw);
    }
    if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
      Tensor gb({g.o});
      // Plain loop: Eigen's vectorised sum peels by runtime alignment, which
      // makes the result depend on where the allocator put the buffer.
      for (int o = 0; o < g.o; ++o) {
        double acc = 0.0;
        for (int i = 0; i < hw; ++i) acc += gout(o, i);
        gb[o] = acc;
      }
      push(self, 2, gb);
    }
    if (self.parents[0]->requires_grad) {
      Tensor gx(parent(self, 0).value.shape());
      if (pointwise) {
        MatMap(gx.data(), g.c, hw).noalias() =
            ConstMatMap(parent(self, 1).value.data(), g.o, ckk).transpose() * gout;
      } else {
        std::vector<double> gcols(static_cast<size_t>(ckk) * hw);
        MatMap(gcols.data(), ckk, hw).noalias() =
            ConstMatMap(parent(self, 1).value.data(), g.o, ckk).transpose() * gout;
        col2im_add(gcols.data(), g, gx.data());
      }
      push(self, 0, gx);
    }
  });
}

Var upsample2x(const Var& x) {
  if (x.value().rank() != 3) throw ShapeError("upsample2x expects (C,H,W)");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor out({c, 2 * h, 2 * w});
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < 2 * h; ++y) {
      for (int xx = 0; xx < 2 * w; ++xx) out.at(ch, y, xx) = x.value().at(ch, y / 2, xx / 2);
    }
  }
  return make_result(std::move(out), {x}, [c, h, w](Node& self) {
    Tensor g({c, h, w});
    for (int ch = 0; ch < c; ++ch) {
      for (int y = 0; y < 2 * h; ++y) {
        for (int xx = 0; xx < 2 * w; ++xx) g.at(ch, y / 2, xx / 2) += self.grad.at(ch, y, xx);
      }
    }
    push(self, 0, g);
  });
}

// ---- reductions ----------------------------------------------------------------

Var sum(const Var& a) {
  const double s = std::accumulate(a.value().values().begin(), a.value().values().end(), 0.0);
  return make_result(Tensor::scalar(s), {a}, [](Node& self) {
    push(self, 0, Tensor(parent(self, 0).value.shape(), self.grad[0]));
  });
}

Var mse(const Var& a, const Var& b) {
  require_same_shape(a.shape(), b.shape(), "mse");
  const size_t n = a.size();
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = a.value()[i] - b.value()[i];
    acc += d * d;
  }
  return make_result(Tensor::scalar(acc / static_cast<double>(n)), {a, b}, [n](Node& self) {
    const Tensor& av = parent(self, 0).value;
    const Tensor& bv = parent(self, 1).value;
    const double k = 2.0 * self.grad[0] / static_cast<double>(n);
    Tensor ga(av.shape()), gb(av.shape());
    for (size_t i = 0; i < n; ++i) {
      ga[i] = k * (av[i] - bv[i]);
      gb[i] = -ga[i];
    }
    push(self, 0, ga);
    push(self, 1, gb);
  });
}

}  // namespace wvsc::ad
