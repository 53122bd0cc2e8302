// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace reprforge {

namespace detail {

/// One node of the gradient tape. Nodes are created in topological order
/// (parents always precede children) and carry the closure that pushes this
/// node's gradient into its parents.
struct TensorNode {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;   // sized lazily during backward / on demand
  bool requires_grad = false;
  const char* op = nullptr;   // op-kind tag; nullptr for leaves
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backprop;
  std::uint64_t seq = 0;      // creation order, gives a topological order

  std::int64_t numel() const {
    std::int64_t n = 1;
    for (int e : shape) n *= e;
    return n;
  }
};

} // namespace detail

/// Dense row-major f64 tensor with optional reverse-mode gradient tracking.
///
/// Copies share storage; values are immutable after creation except for leaf
/// mutation by the optimizer (between tapes) and gradient accumulation.
class Tensor {
public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
  static Tensor from_data(std::vector<int> shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const;
  int rank() const;
  int dim(int axis) const;
  std::int64_t numel() const;

  /// Value of a one-element tensor. Throws NotScalar otherwise.
  double item() const;

  std::span<const double> values() const;
  /// Mutable view of the raw buffer. Only meaningful on leaves (parameter
  /// initialization and optimizer updates); never call on tensors that are
  /// part of a live tape.
  std::span<double> values_mut();

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  /// Deep copy of the values as a fresh constant leaf (no tape, no grad).
  Tensor detached_copy() const;

  std::shared_ptr<detail::TensorNode> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::TensorNode> n) { return Tensor(std::move(n)); }

private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::TensorNode> node_;
};

// --- elementwise ---
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);
Tensor pow_scalar(const Tensor& a, double exponent);
Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor cos(const Tensor& a);
/// arccos with input clamped to [-1+1e-7, 1-1e-7]; gradient is zero outside
/// the clamp range, keeping the derivative finite at +-1.
Tensor acos_clamped(const Tensor& a);

// --- linear algebra ---
Tensor matmul(const Tensor& a, const Tensor& b);
/// a . b^T without materializing the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);

// --- convolution / pooling (rank 3 = CxHxW or rank 4 = NxCxHxW) ---
Tensor conv2d(const Tensor& x, const Tensor& kernel, int stride, int pad);
Tensor maxpool2x2(const Tensor& x);

// --- normalization ---
/// Row-wise softmax over the last axis (rank 1 or 2), max-subtracted.
Tensor softmax(const Tensor& logits);
/// Divide each trailing-dim vector by max(||v||_2, eps).
Tensor l2_normalize(const Tensor& v, double eps = 1e-12);

// --- reductions ---
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Sum over the last axis; rank >= 2.
Tensor sum_last(const Tensor& x);

// --- indexing ---
/// y[i] = x[i, index[i]] for an NxC tensor.
Tensor gather(const Tensor& x, const std::vector<int>& index);
/// First-axis gather: rows may repeat; gradient scatter-adds into the source.
Tensor take_rows(const Tensor& x, const std::vector<int>& rows);
Tensor reshape(const Tensor& x, std::vector<int> new_shape);

/// Reverse-mode sweep from a scalar root. Populates `grad` on every
/// requires_grad ancestor (zeroing them first; fan-out accumulates), then
/// clears the tape so the graph cannot be replayed.
void backward(const Tensor& root);

std::string shape_to_string(const std::vector<int>& shape);

} // namespace reprforge
