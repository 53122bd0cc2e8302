// SPDX-License-Identifier: Apache-2.0
#include "reprforge/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "reprforge/errors.hpp"

namespace reprforge {

namespace {

std::atomic<std::uint64_t> g_seq{1};

using NodePtr = std::shared_ptr<detail::TensorNode>;

NodePtr make_leaf(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
  auto n = std::make_shared<detail::TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  n->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
  return n;
}

/// Create an op node; the backprop closure is only attached when a parent
/// tracks gradients, so constant-only subgraphs carry no tape.
Tensor make_op(const char* op, std::vector<int> shape, std::vector<double> value,
               std::vector<NodePtr> parents, std::function<void(detail::TensorNode&)> backprop) {
  auto n = std::make_shared<detail::TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->op = op;
  n->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
  bool rg = false;
  for (const auto& p : parents) rg = rg || p->requires_grad;
  n->requires_grad = rg;
  if (rg) {
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return Tensor::wrap(n);
}

void ensure_grad(detail::TensorNode& n) {
  if (n.grad.empty()) n.grad.assign(static_cast<std::size_t>(n.numel()), 0.0);
}

std::int64_t shape_numel(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int e : shape) n *= e;
  return n;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeMismatch(std::string(op) + ": shapes " + shape_to_string(a.shape()) + " vs " +
                        shape_to_string(b.shape()));
  }
}

} // namespace

std::string shape_to_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// --- Tensor ---

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  std::vector<double> data(static_cast<std::size_t>(shape_numel(shape)), 0.0);
  return Tensor(make_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
  std::vector<double> data(static_cast<std::size_t>(shape_numel(shape)), value);
  return Tensor(make_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != static_cast<std::int64_t>(data.size())) {
    throw ShapeMismatch("from_data: shape " + shape_to_string(shape) + " needs " +
                        std::to_string(shape_numel(shape)) + " values, got " +
                        std::to_string(data.size()));
  }
  return Tensor(make_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

const std::vector<int>& Tensor::shape() const { return node_->shape; }
int Tensor::rank() const { return static_cast<int>(node_->shape.size()); }
int Tensor::dim(int axis) const { return node_->shape[static_cast<std::size_t>(axis)]; }
std::int64_t Tensor::numel() const { return node_->numel(); }

double Tensor::item() const {
  if (!node_ || node_->numel() != 1) {
    throw NotScalar("item: tensor has " + std::to_string(node_ ? node_->numel() : 0) +
                    " elements");
  }
  return node_->value[0];
}

std::span<const double> Tensor::values() const { return node_->value; }
std::span<double> Tensor::values_mut() { return node_->value; }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw MissingGrad("grad: no gradient buffer on this tensor");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.assign(static_cast<std::size_t>(node_->numel()), 0.0);
}

Tensor Tensor::detached_copy() const {
  return Tensor(make_leaf(node_->shape, node_->value, false));
}

// --- elementwise binary ---

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  return make_op("add", a.shape(), std::move(out), {a.node(), b.node()},
                 [](detail::TensorNode& self) {
                   for (int k = 0; k < 2; ++k) {
                     auto& p = *self.parents[static_cast<std::size_t>(k)];
                     if (!p.requires_grad) continue;
                     ensure_grad(p);
                     for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
                   }
                 });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  return make_op("sub", a.shape(), std::move(out), {a.node(), b.node()},
                 [](detail::TensorNode& self) {
                   auto& pa = *self.parents[0];
                   auto& pb = *self.parents[1];
                   if (pa.requires_grad) {
                     ensure_grad(pa);
                     for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
                   }
                   if (pb.requires_grad) {
                     ensure_grad(pb);
                     for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] -= self.grad[i];
                   }
                 });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  return make_op("mul", a.shape(), std::move(out), {a.node(), b.node()},
                 [](detail::TensorNode& self) {
                   auto& pa = *self.parents[0];
                   auto& pb = *self.parents[1];
                   if (pa.requires_grad) {
                     ensure_grad(pa);
                     for (std::size_t i = 0; i < self.grad.size(); ++i)
                       pa.grad[i] += self.grad[i] * pb.value[i];
                   }
                   if (pb.requires_grad) {
                     ensure_grad(pb);
                     for (std::size_t i = 0; i < self.grad.size(); ++i)
                       pb.grad[i] += self.grad[i] * pa.value[i];
                   }
                 });
}

// --- scalar ops ---

Tensor add_scalar(const Tensor& a, double c) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + c;
  return make_op("add_scalar", a.shape(), std::move(out), {a.node()},
                 [](detail::TensorNode& self) {
                   auto& p = *self.parents[0];
                   ensure_grad(p);
                   for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
                 });
}

Tensor mul_scalar(const Tensor& a, double c) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * c;
  return make_op("mul_scalar", a.shape(), std::move(out), {a.node()},
                 [c](detail::TensorNode& self) {
                   auto& p = *self.parents[0];
                   ensure_grad(p);
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     p.grad[i] += c * self.grad[i];
                 });
}

Tensor pow_scalar(const Tensor& a, double exponent) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::pow(av[i], exponent);
  return make_op("pow_scalar", a.shape(), std::move(out), {a.node()},
                 [exponent](detail::TensorNode& self) {
                   if (exponent == 0.0) return;  // constant, and pow(0,-1) would poison the grad
                   auto& p = *self.parents[0];
                   ensure_grad(p);
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     p.grad[i] += exponent * std::pow(p.value[i], exponent - 1.0) * self.grad[i];
                 });
}

Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

// --- unary ---

Tensor relu(const Tensor& a) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  return make_op("relu", a.shape(), std::move(out), {a.node()},
                 [](detail::TensorNode& self) {
                   auto& p = *self.parents[0];
                   ensure_grad(p);
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     if (p.value[i] > 0.0) p.grad[i] += self.grad[i];
                 });
}

Tensor exp(const Tensor& a) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::exp(av[i]);
  return make_op("exp", a.shape(), std::move(out), {a.node()},
                 [](detail::TensorNode& self) {
                   auto& p = *self.parents[0];
                   ensure_grad(p);
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     p.grad[i] += self.value[i] * self.grad[i];
                 });
}

Tensor log(const Tensor& a) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::log(av[i]);
  return make_op("log", a.shape(), std::move(out), {a.node()},
                 [](detail::TensorNode& self) {
                   auto& p = *self.parents[0];
                   ensure_grad(p);
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     p.grad[i] += self.grad[i] / p.value[i];
                 });
}

Tensor cos(const Tensor& a) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::cos(av[i]);
  return make_op("cos", a.shape(), std::move(out), {a.node()},
                 [](detail::TensorNode& self) {
                   auto& p = *self.parents[0];
                   ensure_grad(p);
                   for (std::size_t i = 0; i < self.grad.size(); ++i)
                     p.grad[i] -= std::sin(p.value[i]) * self.grad[i];
                 });
}

namespace {
constexpr double kAcosLo = -1.0 + 1e-7;
constexpr double kAcosHi = 1.0 - 1e-7;
} // namespace

Tensor acos_clamped(const Tensor& a) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i)
    out[i] = std::acos(std::clamp(av[i], kAcosLo, kAcosHi));
  return make_op("acos_clamped", a.shape(), std::move(out), {a.node()},
                 [](detail::TensorNode& self) {
                   auto& p = *self.parents[0];
                   ensure_grad(p);
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     double x = p.value[i];
                     if (x > kAcosLo && x < kAcosHi)
                       p.grad[i] += -1.0 / std::sqrt(1.0 - x * x) * self.grad[i];
                   }
                 });
}

// --- matmul ---

namespace {

// c[M x P] += a[M x K] . b[K x P]
void gemm_nn(const double* a, const double* b, double* c, int m, int k, int p) {
  for (int i = 0; i < m; ++i) {
    for (int l = 0; l < k; ++l) {
      const double av = a[i * k + l];
      if (av == 0.0) continue;
      const double* brow = b + l * p;
      double* crow = c + i * p;
      for (int j = 0; j < p; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[M x P] += a[M x K] . b[P x K]^T
void gemm_nt(const double* a, const double* b, double* c, int m, int k, int p) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (int j = 0; j < p; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (int l = 0; l < k; ++l) acc += arow[l] * brow[l];
      c[i * p + j] += acc;
    }
  }
}

// c[K x P] += a[M x K]^T . b[M x P]
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int p) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * p;
    for (int l = 0; l < k; ++l) {
      const double av = arow[l];
      if (av == 0.0) continue;
      double* crow = c + l * p;
      for (int j = 0; j < p; ++j) crow[j] += av * brow[j];
    }
  }
}

void check_rank2(const char* op, const Tensor& t) {
  if (t.rank() != 2)
    throw ShapeMismatch(std::string(op) + ": expected rank-2 tensor, got " +
                        shape_to_string(t.shape()));
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_rank2("matmul", a);
  check_rank2("matmul", b);
  const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), p = b.dim(1);
  if (k != k2)
    throw ShapeMismatch("matmul: inner extents disagree, " + shape_to_string(a.shape()) + " . " +
                        shape_to_string(b.shape()));
  std::vector<double> out(static_cast<std::size_t>(m) * p, 0.0);
  gemm_nn(a.values().data(), b.values().data(), out.data(), m, k, p);
  return make_op("matmul", {m, p}, std::move(out), {a.node(), b.node()},
                 [m, k, p](detail::TensorNode& self) {
                   auto& pa = *self.parents[0];
                   auto& pb = *self.parents[1];
                   if (pa.requires_grad) {
                     ensure_grad(pa);
                     // gA = G . B^T
                     gemm_nt(self.grad.data(), pb.value.data(), pa.grad.data(), m, p, k);
                   }
                   if (pb.requires_grad) {
                     ensure_grad(pb);
                     // gB = A^T . G
                     gemm_tn(pa.value.data(), self.grad.data(), pb.grad.data(), m, k, p);
                   }
                 });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_rank2("matmul_nt", a);
  check_rank2("matmul_nt", b);
  const int m = a.dim(0), k = a.dim(1), p = b.dim(0);
  if (k != b.dim(1))
    throw ShapeMismatch("matmul_nt: inner extents disagree, " + shape_to_string(a.shape()) +
                        " . " + shape_to_string(b.shape()) + "^T");
  std::vector<double> out(static_cast<std::size_t>(m) * p, 0.0);
  gemm_nt(a.values().data(), b.values().data(), out.data(), m, k, p);
  return make_op("matmul_nt", {m, p}, std::move(out), {a.node(), b.node()},
                 [m, k, p](detail::TensorNode& self) {
                   auto& pa = *self.parents[0];
                   auto& pb = *self.parents[1];
                   if (pa.requires_grad) {
                     ensure_grad(pa);
                     // gA = G . B
                     gemm_nn(self.grad.data(), pb.value.data(), pa.grad.data(), m, p, k);
                   }
                   if (pb.requires_grad) {
                     ensure_grad(pb);
                     // gB = G^T . A
                     gemm_tn(self.grad.data(), pa.value.data(), pb.grad.data(), m, p, k);
                   }
                 });
}

// --- conv2d / maxpool ---

namespace {

struct ConvGeom {
  int n, c, h, w;       // input
  int f, kh, kw;        // kernel
  int stride, pad;
  int oh, ow;
  bool batched;
};

ConvGeom conv_geometry(const Tensor& x, const Tensor& k, int stride, int pad) {
  if (x.rank() != 3 && x.rank() != 4)
    throw ShapeMismatch("conv2d: input must be CxHxW or NxCxHxW, got " +
                        shape_to_string(x.shape()));
  if (k.rank() != 4)
    throw ShapeMismatch("conv2d: kernel must be FxCxKHxKW, got " + shape_to_string(k.shape()));
  if (stride < 1) throw ShapeMismatch("conv2d: stride must be >= 1");
  if (pad < 0) throw ShapeMismatch("conv2d: pad must be >= 0");
  ConvGeom g;
  g.batched = x.rank() == 4;
  g.n = g.batched ? x.dim(0) : 1;
  g.c = x.dim(g.batched ? 1 : 0);
  g.h = x.dim(g.batched ? 2 : 1);
  g.w = x.dim(g.batched ? 3 : 2);
  g.f = k.dim(0);
  g.kh = k.dim(2);
  g.kw = k.dim(3);
  g.stride = stride;
  g.pad = pad;
  if (k.dim(1) != g.c)
    throw ShapeMismatch("conv2d: channel mismatch, input C=" + std::to_string(g.c) +
                        " kernel C=" + std::to_string(k.dim(1)));
  if (g.kh > g.h + 2 * pad || g.kw > g.w + 2 * pad)
    throw ShapeMismatch("conv2d: kernel larger than padded input");
  g.oh = (g.h + 2 * pad - g.kh) / stride + 1;
  g.ow = (g.w + 2 * pad - g.kw) / stride + 1;
  return g;
}

} // namespace

Tensor conv2d(const Tensor& x, const Tensor& kernel, int stride, int pad) {
  const ConvGeom g = conv_geometry(x, kernel, stride, pad);
  const double* xv = x.values().data();
  const double* kv = kernel.values().data();
  std::vector<double> out(static_cast<std::size_t>(g.n) * g.f * g.oh * g.ow, 0.0);

  for (int n = 0; n < g.n; ++n) {
    const double* xn = xv + static_cast<std::size_t>(n) * g.c * g.h * g.w;
    double* on = out.data() + static_cast<std::size_t>(n) * g.f * g.oh * g.ow;
    for (int f = 0; f < g.f; ++f) {
      const double* kf = kv + static_cast<std::size_t>(f) * g.c * g.kh * g.kw;
      for (int oy = 0; oy < g.oh; ++oy) {
        for (int ox = 0; ox < g.ow; ++ox) {
          double acc = 0.0;
          const int iy0 = oy * g.stride - g.pad;
          const int ix0 = ox * g.stride - g.pad;
          for (int c = 0; c < g.c; ++c) {
            const double* xc = xn + static_cast<std::size_t>(c) * g.h * g.w;
            const double* kc = kf + static_cast<std::size_t>(c) * g.kh * g.kw;
            for (int ky = 0; ky < g.kh; ++ky) {
              const int iy = iy0 + ky;
              if (iy < 0 || iy >= g.h) continue;
              for (int kx = 0; kx < g.kw; ++kx) {
                const int ix = ix0 + kx;
                if (ix < 0 || ix >= g.w) continue;
                acc += xc[iy * g.w + ix] * kc[ky * g.kw + kx];
              }
            }
          }
          on[(f * g.oh + oy) * g.ow + ox] = acc;
        }
      }
    }
  }

  std::vector<int> out_shape =
      g.batched ? std::vector<int>{g.n, g.f, g.oh, g.ow} : std::vector<int>{g.f, g.oh, g.ow};
  return make_op(
      "conv2d", std::move(out_shape), std::move(out), {x.node(), kernel.node()},
      [g](detail::TensorNode& self) {
        auto& px = *self.parents[0];
        auto& pk = *self.parents[1];
        if (px.requires_grad) ensure_grad(px);
        if (pk.requires_grad) ensure_grad(pk);
        const double* gv = self.grad.data();
        for (int n = 0; n < g.n; ++n) {
          const double* xn = px.value.data() + static_cast<std::size_t>(n) * g.c * g.h * g.w;
          double* gxn =
              px.requires_grad ? px.grad.data() + static_cast<std::size_t>(n) * g.c * g.h * g.w
                               : nullptr;
          const double* gn = gv + static_cast<std::size_t>(n) * g.f * g.oh * g.ow;
          for (int f = 0; f < g.f; ++f) {
            const double* kf = pk.value.data() + static_cast<std::size_t>(f) * g.c * g.kh * g.kw;
            double* gkf = pk.requires_grad
                              ? pk.grad.data() + static_cast<std::size_t>(f) * g.c * g.kh * g.kw
                              : nullptr;
            for (int oy = 0; oy < g.oh; ++oy) {
              for (int ox = 0; ox < g.ow; ++ox) {
                const double go = gn[(f * g.oh + oy) * g.ow + ox];
                if (go == 0.0) continue;
                const int iy0 = oy * g.stride - g.pad;
                const int ix0 = ox * g.stride - g.pad;
                for (int c = 0; c < g.c; ++c) {
                  const double* xc = xn + static_cast<std::size_t>(c) * g.h * g.w;
                  const double* kc = kf + static_cast<std::size_t>(c) * g.kh * g.kw;
                  double* gxc = gxn ? gxn + static_cast<std::size_t>(c) * g.h * g.w : nullptr;
                  double* gkc = gkf ? gkf + static_cast<std::size_t>(c) * g.kh * g.kw : nullptr;
                  for (int ky = 0; ky < g.kh; ++ky) {
                    const int iy = iy0 + ky;
                    if (iy < 0 || iy >= g.h) continue;
                    for (int kx = 0; kx < g.kw; ++kx) {
                      const int ix = ix0 + kx;
                      if (ix < 0 || ix >= g.w) continue;
                      if (gxc) gxc[iy * g.w + ix] += go * kc[ky * g.kw + kx];
                      if (gkc) gkc[ky * g.kw + kx] += go * xc[iy * g.w + ix];
                    }
                  }
                }
              }
            }
          }
        }
      });
}

Tensor maxpool2x2(const Tensor& x) {
  if (x.rank() != 3 && x.rank() != 4)
    throw ShapeMismatch("maxpool2x2: input must be CxHxW or NxCxHxW, got " +
                        shape_to_string(x.shape()));
  const bool batched = x.rank() == 4;
  const int n = batched ? x.dim(0) : 1;
  const int c = x.dim(batched ? 1 : 0);
  const int h = x.dim(batched ? 2 : 1);
  const int w = x.dim(batched ? 3 : 2);
  const int oh = h / 2, ow = w / 2;
  if (oh == 0 || ow == 0)
    throw ShapeMismatch("maxpool2x2: spatial extent too small, " + shape_to_string(x.shape()));

  const double* xv = x.values().data();
  const std::int64_t planes = static_cast<std::int64_t>(n) * c;
  std::vector<double> out(static_cast<std::size_t>(planes) * oh * ow);
  std::vector<std::int32_t> argmax(out.size());
  for (std::int64_t pl = 0; pl < planes; ++pl) {
    const double* xp = xv + pl * h * w;
    double* op = out.data() + pl * oh * ow;
    std::int32_t* ap = argmax.data() + pl * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        // first max wins on ties for a deterministic backward
        int best = (2 * oy) * w + 2 * ox;
        double bv = xp[best];
        const int cand[3] = {(2 * oy) * w + 2 * ox + 1, (2 * oy + 1) * w + 2 * ox,
                             (2 * oy + 1) * w + 2 * ox + 1};
        for (int idx : cand) {
          if (xp[idx] > bv) {
            bv = xp[idx];
            best = idx;
          }
        }
        op[oy * ow + ox] = bv;
        ap[oy * ow + ox] = best;
      }
    }
  }

  std::vector<int> out_shape =
      batched ? std::vector<int>{n, c, oh, ow} : std::vector<int>{c, oh, ow};
  return make_op("maxpool2x2", std::move(out_shape), std::move(out), {x.node()},
                 [argmax = std::move(argmax), planes, h, w, oh, ow](detail::TensorNode& self) {
                   auto& p = *self.parents[0];
                   ensure_grad(p);
                   for (std::int64_t pl = 0; pl < planes; ++pl) {
                     const double* gp = self.grad.data() + pl * oh * ow;
                     const std::int32_t* ap = argmax.data() + pl * oh * ow;
                     double* gx = p.grad.data() + pl * h * w;
                     for (int i = 0; i < oh * ow; ++i) gx[ap[i]] += gp[i];
                   }
                 });
}

// --- softmax / l2_normalize ---

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 1 && logits.rank() != 2)
    throw ShapeMismatch("softmax: expected rank 1 or 2, got " + shape_to_string(logits.shape()));
  const int rows = logits.rank() == 2 ? logits.dim(0) : 1;
  const int cols = logits.rank() == 2 ? logits.dim(1) : logits.dim(0);
  const double* xv = logits.values().data();
  std::vector<double> out(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    const double* row = xv + static_cast<std::size_t>(r) * cols;
    double* orow = out.data() + static_cast<std::size_t>(r) * cols;
    double mx = row[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (int j = 0; j < cols; ++j) {
      orow[j] = std::exp(row[j] - mx);
      denom += orow[j];
    }
    for (int j = 0; j < cols; ++j) orow[j] /= denom;
  }
  return make_op("softmax", logits.shape(), std::move(out), {logits.node()},
                 [rows, cols](detail::TensorNode& self) {
                   auto& p = *self.parents[0];
                   ensure_grad(p);
                   for (int r = 0; r < rows; ++r) {
                     const double* y = self.value.data() + static_cast<std::size_t>(r) * cols;
                     const double* g = self.grad.data() + static_cast<std::size_t>(r) * cols;
                     double* gx = p.grad.data() + static_cast<std::size_t>(r) * cols;
                     double dot = 0.0;
                     for (int j = 0; j < cols; ++j) dot += g[j] * y[j];
                     for (int j = 0; j < cols; ++j) gx[j] += y[j] * (g[j] - dot);
                   }
                 });
}

Tensor l2_normalize(const Tensor& v, double eps) {
  if (v.rank() < 1) throw ShapeMismatch("l2_normalize: undefined on rank-0");
  if (eps <= 0.0) throw ShapeMismatch("l2_normalize: eps must be > 0");
  const int d = v.dim(v.rank() - 1);
  const std::int64_t vectors = v.numel() / d;
  const double* xv = v.values().data();
  std::vector<double> out(static_cast<std::size_t>(v.numel()));
  std::vector<double> norms(static_cast<std::size_t>(vectors));
  for (std::int64_t r = 0; r < vectors; ++r) {
    const double* row = xv + r * d;
    double sq = 0.0;
    for (int j = 0; j < d; ++j) sq += row[j] * row[j];
    const double norm = std::sqrt(sq);
    norms[static_cast<std::size_t>(r)] = norm;
    const double denom = std::max(norm, eps);
    for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(r * d + j)] = row[j] / denom;
  }
  return make_op("l2_normalize", v.shape(), std::move(out), {v.node()},
                 [norms = std::move(norms), vectors, d, eps](detail::TensorNode& self) {
                   auto& p = *self.parents[0];
                   ensure_grad(p);
                   for (std::int64_t r = 0; r < vectors; ++r) {
                     const double* y = self.value.data() + r * d;
                     const double* g = self.grad.data() + r * d;
                     double* gx = p.grad.data() + r * d;
                     const double norm = norms[static_cast<std::size_t>(r)];
                     if (norm > eps) {
                       double dot = 0.0;
                       for (int j = 0; j < d; ++j) dot += g[j] * y[j];
                       for (int j = 0; j < d; ++j) gx[j] += (g[j] - y[j] * dot) / norm;
                     } else {
                       for (int j = 0; j < d; ++j) gx[j] += g[j] / eps;
                     }
                   }
                 });
}

// --- reductions ---

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  return make_op("sum", {1}, {acc}, {x.node()}, [](detail::TensorNode& self) {
    auto& p = *self.parents[0];
    ensure_grad(p);
    const double g = self.grad[0];
    for (auto& gv : p.grad) gv += g;
  });
}

Tensor mean(const Tensor& x) {
  const double n = static_cast<double>(x.numel());
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  return make_op("mean", {1}, {acc / n}, {x.node()}, [n](detail::TensorNode& self) {
    auto& p = *self.parents[0];
    ensure_grad(p);
    const double g = self.grad[0] / n;
    for (auto& gv : p.grad) gv += g;
  });
}

Tensor sum_last(const Tensor& x) {
  if (x.rank() < 2) throw ShapeMismatch("sum_last: expected rank >= 2");
  const int d = x.dim(x.rank() - 1);
  const std::int64_t rows = x.numel() / d;
  const double* xv = x.values().data();
  std::vector<double> out(static_cast<std::size_t>(rows), 0.0);
  for (std::int64_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) acc += xv[r * d + j];
    out[static_cast<std::size_t>(r)] = acc;
  }
  std::vector<int> out_shape(x.shape().begin(), x.shape().end() - 1);
  return make_op("sum_last", std::move(out_shape), std::move(out), {x.node()},
                 [rows, d](detail::TensorNode& self) {
                   auto& p = *self.parents[0];
                   ensure_grad(p);
                   for (std::int64_t r = 0; r < rows; ++r) {
                     const double g = self.grad[static_cast<std::size_t>(r)];
                     for (int j = 0; j < d; ++j) p.grad[static_cast<std::size_t>(r * d + j)] += g;
                   }
                 });
}

// --- indexing ---

Tensor gather(const Tensor& x, const std::vector<int>& index) {
  if (x.rank() != 2) throw ShapeMismatch("gather: expected NxC tensor");
  const int n = x.dim(0), c = x.dim(1);
  if (static_cast<int>(index.size()) != n)
    throw ShapeMismatch("gather: index length " + std::to_string(index.size()) +
                        " != rows " + std::to_string(n));
  for (int i : index)
    if (i < 0 || i >= c)
      throw IndexOutOfRange("gather: index " + std::to_string(i) + " outside [0," +
                            std::to_string(c) + ")");
  const double* xv = x.values().data();
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = xv[i * c + index[i]];
  return make_op("gather", {n}, std::move(out), {x.node()},
                 [index, c](detail::TensorNode& self) {
                   auto& p = *self.parents[0];
                   ensure_grad(p);
                   for (std::size_t i = 0; i < index.size(); ++i)
                     p.grad[i * static_cast<std::size_t>(c) +
                            static_cast<std::size_t>(index[i])] += self.grad[i];
                 });
}

Tensor take_rows(const Tensor& x, const std::vector<int>& rows) {
  if (x.rank() < 1) throw ShapeMismatch("take_rows: undefined on rank-0");
  const int n = x.dim(0);
  const std::int64_t row_size = x.numel() / n;
  for (int r : rows)
    if (r < 0 || r >= n)
      throw IndexOutOfRange("take_rows: row " + std::to_string(r) + " outside [0," +
                            std::to_string(n) + ")");
  const double* xv = x.values().data();
  std::vector<double> out(static_cast<std::size_t>(rows.size()) *
                          static_cast<std::size_t>(row_size));
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(xv + rows[i] * row_size, row_size, out.data() + i * row_size);
  std::vector<int> out_shape = x.shape();
  out_shape[0] = static_cast<int>(rows.size());
  return make_op("take_rows", std::move(out_shape), std::move(out), {x.node()},
                 [rows, row_size](detail::TensorNode& self) {
                   auto& p = *self.parents[0];
                   ensure_grad(p);
                   for (std::size_t i = 0; i < rows.size(); ++i) {
                     const double* g = self.grad.data() + i * static_cast<std::size_t>(row_size);
                     double* gx = p.grad.data() + rows[i] * row_size;
                     for (std::int64_t j = 0; j < row_size; ++j) gx[j] += g[j];
                   }
                 });
}

Tensor reshape(const Tensor& x, std::vector<int> new_shape) {
  if (shape_numel(new_shape) != x.numel())
    throw ShapeMismatch("reshape: " + shape_to_string(x.shape()) + " -> " +
                        shape_to_string(new_shape) + " changes element count");
  std::vector<double> out(x.values().begin(), x.values().end());
  return make_op("reshape", std::move(new_shape), std::move(out), {x.node()},
                 [](detail::TensorNode& self) {
                   auto& p = *self.parents[0];
                   ensure_grad(p);
                   for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
                 });
}

// --- backward ---

void backward(const Tensor& root) {
  auto r = root.node();
  if (!r) throw DetachedRoot("backward: undefined tensor");
  if (r->numel() != 1)
    throw NotScalar("backward: root has " + std::to_string(r->numel()) + " elements");
  if (!r->backprop) throw DetachedRoot("backward: root has no tape node");

  // Collect the requires_grad subgraph reachable from the root. Shared
  // ownership keeps intermediate nodes alive while the tape is torn down.
  std::vector<std::shared_ptr<detail::TensorNode>> order;
  std::unordered_set<detail::TensorNode*> seen;
  std::vector<std::shared_ptr<detail::TensorNode>> stack{r};
  seen.insert(r.get());
  while (!stack.empty()) {
    std::shared_ptr<detail::TensorNode> cur = std::move(stack.back());
    stack.pop_back();
    for (const auto& p : cur->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p);
    }
    order.push_back(std::move(cur));
  }
  // seq gives a topological order: parents are always created before children.
  std::sort(order.begin(), order.end(),
            [](const std::shared_ptr<detail::TensorNode>& a,
               const std::shared_ptr<detail::TensorNode>& b) { return a->seq > b->seq; });

  for (const auto& n : order) n->grad.assign(static_cast<std::size_t>(n->numel()), 0.0);
  r->grad[0] = 1.0;
  for (const auto& n : order)
    if (n->backprop) n->backprop(*n);

  // The tape is per-run: release the graph so it cannot be replayed.
  for (const auto& n : order) {
    n->backprop = nullptr;
    n->parents.clear();
  }
}

} // namespace reprforge
