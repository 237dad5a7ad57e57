#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "foresee/errors.hpp"

namespace foresee {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

template <class T>
class Tape;

// Dense row-major tensor. Copies are shallow: a Tensor is a shared handle to
// one buffer, so passing tensors around (and capturing them in tape closures)
// is cheap. The gradient buffer exists iff requires_grad is set.
template <class T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0)) {
    node_ = std::make_shared<Node>();
    node_->shape = std::move(shape);
    node_->data.assign(shape_numel(node_->shape), fill);
  }

  Tensor(Shape shape, std::vector<T> values) {
    node_ = std::make_shared<Node>();
    node_->shape = std::move(shape);
    if (shape_numel(node_->shape) != values.size())
      throw DimensionError("tensor: shape " + shape_str(node_->shape) + " does not hold " +
                           std::to_string(values.size()) + " values");
    node_->data = std::move(values);
  }

  static Tensor scalar(T v) { return Tensor({1}, std::vector<T>{v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape[i]; }

  // A Tensor is a shared handle; const-ness of the handle does not make the
  // buffer immutable, mirroring shared_ptr semantics.
  T* data() const { return node_->data.data(); }
  std::vector<T>& values() const { return node_->data; }

  T& operator[](std::size_t i) const { return node_->data[i]; }

  // Value of a single-element tensor.
  T item() const {
    if (size() != 1)
      throw ContractError("item: tensor has " + std::to_string(size()) + " elements");
    return node_->data[0];
  }

  bool requires_grad() const { return node_->requires_grad; }

  void set_requires_grad(bool on) const {
    node_->requires_grad = on;
    if (on)
      node_->grad.assign(node_->data.size(), T(0));
    else
      node_->grad.clear();
  }

  T* grad() const { return node_->requires_grad ? node_->grad.data() : nullptr; }

  std::vector<T>& grad_values() const { return node_->grad; }

  void zero_grad() const {
    std::fill(node_->grad.begin(), node_->grad.end(), T(0));
  }

  // Deep copy of the values; gradient state is not carried over.
  Tensor clone() const {
    Tensor out;
    out.node_ = std::make_shared<Node>();
    out.node_->shape = node_->shape;
    out.node_->data = node_->data;
    return out;
  }

  void copy_values_from(const Tensor& src) {
    if (src.size() != size())
      throw DimensionError("copy_values_from: " + shape_str(src.shape()) + " vs " +
                           shape_str(shape()));
    node_->data = src.node_->data;
  }

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  const void* producer() const { return node_->producer; }
  void mark_produced_by(const void* tape) { node_->producer = tape; }

 private:
  struct Node {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
    const void* producer = nullptr;
  };
  std::shared_ptr<Node> node_;
};

// Reverse-mode tape. Operations append a backward closure as they execute;
// backward() replays the closures in exact reverse execution order. Tensors
// produced on the tape are registered so their gradients can be reset before
// each replay, while leaf gradients accumulate across successive backward
// calls until the caller zeroes them.
template <class T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::function<void()> backward_step) {
    ops_.push_back(std::move(backward_step));
  }

  // Registers an op result: allocates its gradient buffer and marks it as
  // produced here so backward() can find and reset it.
  void note_output(Tensor<T>& out) {
    out.set_requires_grad(true);
    out.mark_produced_by(this);
    outputs_.push_back(out);
  }

  void backward(const Tensor<T>& loss) {
    if (loss.size() != 1)
      throw ContractError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
    if (loss.producer() != this)
      throw ContractError("backward: loss tensor was not produced on this tape");
    for (auto& out : outputs_) out.zero_grad();
    loss.grad()[0] = T(1);
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  }

  void clear() {
    ops_.clear();
    outputs_.clear();
  }

  std::size_t size() const { return ops_.size(); }

 private:
  std::vector<std::function<void()>> ops_;
  std::vector<Tensor<T>> outputs_;
};

namespace detail {

template <class T>
inline bool wants_tape(Tape<T>* tape, std::initializer_list<const Tensor<T>*> inputs) {
  if (!tape) return false;
  for (const Tensor<T>* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

template <class T>
inline void check_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise operations
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr) {
  detail::check_same_shape("add", a, b);
  Tensor<T> out(a.shape());
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
  if (detail::wants_tape(tape, {&a, &b})) {
    tape->note_output(out);
    tape->record([a, b, out]() mutable {
      const T* g = out.grad();
      const std::size_t n = out.size();
      if (a.requires_grad()) {
        T* ga = a.grad();
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        T* gb = b.grad();
        for (std::size_t i = 0; i < n; ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr) {
  detail::check_same_shape("sub", a, b);
  Tensor<T> out(a.shape());
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
  if (detail::wants_tape(tape, {&a, &b})) {
    tape->note_output(out);
    tape->record([a, b, out]() mutable {
      const T* g = out.grad();
      const std::size_t n = out.size();
      if (a.requires_grad()) {
        T* ga = a.grad();
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        T* gb = b.grad();
        for (std::size_t i = 0; i < n; ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

// Hadamard product.
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr) {
  detail::check_same_shape("mul", a, b);
  Tensor<T> out(a.shape());
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
  if (detail::wants_tape(tape, {&a, &b})) {
    tape->note_output(out);
    tape->record([a, b, out]() mutable {
      const T* g = out.grad();
      const std::size_t n = out.size();
      if (a.requires_grad()) {
        T* ga = a.grad();
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * b[i];
      }
      if (b.requires_grad()) {
        T* gb = b.grad();
        for (std::size_t i = 0; i < n; ++i) gb[i] += g[i] * a[i];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> scale(const Tensor<T>& x, T c, Tape<T>* tape = nullptr) {
  Tensor<T> out(x.shape());
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = c * x[i];
  if (detail::wants_tape(tape, {&x})) {
    tape->note_output(out);
    tape->record([x, out, c]() mutable {
      if (!x.requires_grad()) return;
      const T* g = out.grad();
      T* gx = x.grad();
      const std::size_t n = out.size();
      for (std::size_t i = 0; i < n; ++i) gx[i] += c * g[i];
    });
  }
  return out;
}

template <class T>
Tensor<T> add_scalar(const Tensor<T>& x, T c, Tape<T>* tape = nullptr) {
  Tensor<T> out(x.shape());
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + c;
  if (detail::wants_tape(tape, {&x})) {
    tape->note_output(out);
    tape->record([x, out]() mutable {
      if (!x.requires_grad()) return;
      const T* g = out.grad();
      T* gx = x.grad();
      const std::size_t n = out.size();
      for (std::size_t i = 0; i < n; ++i) gx[i] += g[i];
    });
  }
  return out;
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x, Tape<T>* tape = nullptr) {
  Tensor<T> out(x.shape());
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const T v = x[i];
    if (v >= T(0)) {
      out[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      out[i] = e / (T(1) + e);
    }
  }
  if (detail::wants_tape(tape, {&x})) {
    tape->note_output(out);
    tape->record([x, out]() mutable {
      if (!x.requires_grad()) return;
      const T* g = out.grad();
      T* gx = x.grad();
      const std::size_t n = out.size();
      for (std::size_t i = 0; i < n; ++i) {
        const T s = out[i];
        gx[i] += g[i] * s * (T(1) - s);
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> tanh(const Tensor<T>& x, Tape<T>* tape = nullptr) {
  Tensor<T> out(x.shape());
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
  if (detail::wants_tape(tape, {&x})) {
    tape->note_output(out);
    tape->record([x, out]() mutable {
      if (!x.requires_grad()) return;
      const T* g = out.grad();
      T* gx = x.grad();
      const std::size_t n = out.size();
      for (std::size_t i = 0; i < n; ++i) {
        const T t = out[i];
        gx[i] += g[i] * (T(1) - t * t);
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> exp(const Tensor<T>& x, Tape<T>* tape = nullptr) {
  Tensor<T> out(x.shape());
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
  if (detail::wants_tape(tape, {&x})) {
    tape->note_output(out);
    tape->record([x, out]() mutable {
      if (!x.requires_grad()) return;
      const T* g = out.grad();
      T* gx = x.grad();
      const std::size_t n = out.size();
      for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * out[i];
    });
  }
  return out;
}

// Clamp to [0,1] with pass-through gradient strictly inside the interval.
template <class T>
Tensor<T> clamp01(const Tensor<T>& x, Tape<T>* tape = nullptr) {
  Tensor<T> out(x.shape());
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = std::min(T(1), std::max(T(0), x[i]));
  if (detail::wants_tape(tape, {&x})) {
    tape->note_output(out);
    tape->record([x, out]() mutable {
      if (!x.requires_grad()) return;
      const T* g = out.grad();
      T* gx = x.grad();
      const std::size_t n = out.size();
      for (std::size_t i = 0; i < n; ++i)
        if (x[i] > T(0) && x[i] < T(1)) gx[i] += g[i];
    });
  }
  return out;
}

// x is [m x n] (or a flat multiple of n), bias has n entries broadcast over rows.
template <class T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias, Tape<T>* tape = nullptr) {
  const std::size_t n = bias.size();
  if (n == 0 || x.size() % n != 0)
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " does not broadcast over " +
                         shape_str(x.shape()));
  const std::size_t rows = x.size() / n;
  Tensor<T> out(x.shape());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = x[r * n + j] + bias[j];
  if (detail::wants_tape(tape, {&x, &bias})) {
    tape->note_output(out);
    tape->record([x, bias, out, rows, n]() mutable {
      const T* g = out.grad();
      if (x.requires_grad()) {
        T* gx = x.grad();
        const std::size_t total = out.size();
        for (std::size_t i = 0; i < total; ++i) gx[i] += g[i];
      }
      if (bias.requires_grad()) {
        T* gb = bias.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < n; ++j) gb[j] += g[r * n + j];
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix product
// ---------------------------------------------------------------------------

// a is [m x k] (or rank-1 [k], treated as a single row), b is [k x n].
// Result is [m x n], or rank-1 [n] when a was rank-1.
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr) {
  if (b.rank() != 2)
    throw DimensionError("matmul: right operand must be rank-2, got " + shape_str(b.shape()));
  const bool vec = a.rank() == 1;
  if (!vec && a.rank() != 2)
    throw DimensionError("matmul: left operand must be rank-1 or rank-2, got " +
                         shape_str(a.shape()));
  const std::size_t m = vec ? 1 : a.dim(0);
  const std::size_t k = vec ? a.dim(0) : a.dim(1);
  const std::size_t n = b.dim(1);
  if (k != b.dim(0))
    throw DimensionError("matmul: inner dimensions disagree: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));

  Tensor<T> out(vec ? Shape{n} : Shape{m, n});
  {
    const T* pa = a.data();
    const T* pb = b.data();
    T* pc = out.data();
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = pc + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const T aip = pa[i * k + p];
        if (aip == T(0)) continue;
        const T* brow = pb + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  }

  if (detail::wants_tape(tape, {&a, &b})) {
    tape->note_output(out);
    tape->record([a, b, out, m, k, n]() mutable {
      const T* g = out.grad();
      if (a.requires_grad()) {
        // dA[i,p] = sum_j dC[i,j] * B[p,j]
        T* ga = a.grad();
        const T* pb = b.data();
        for (std::size_t i = 0; i < m; ++i) {
          const T* grow = g + i * n;
          for (std::size_t p = 0; p < k; ++p) {
            const T* brow = pb + p * n;
            T acc = T(0);
            for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            ga[i * k + p] += acc;
          }
        }
      }
      if (b.requires_grad()) {
        // dB[p,j] = sum_i A[i,p] * dC[i,j]
        T* gb = b.grad();
        const T* pa = a.data();
        for (std::size_t i = 0; i < m; ++i) {
          const T* grow = g + i * n;
          for (std::size_t p = 0; p < k; ++p) {
            const T aip = pa[i * k + p];
            if (aip == T(0)) continue;
            T* gbrow = gb + p * n;
            for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
          }
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reductions and structured ops
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> sum(const Tensor<T>& x, Tape<T>* tape = nullptr) {
  T acc = T(0);
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  Tensor<T> out = Tensor<T>::scalar(acc);
  if (detail::wants_tape(tape, {&x})) {
    tape->note_output(out);
    tape->record([x, out]() mutable {
      if (!x.requires_grad()) return;
      const T g = out.grad()[0];
      T* gx = x.grad();
      const std::size_t n = x.size();
      for (std::size_t i = 0; i < n; ++i) gx[i] += g;
    });
  }
  return out;
}

// Numerically stable softmax over the flattened input.
template <class T>
Tensor<T> softmax(const Tensor<T>& x, Tape<T>* tape = nullptr) {
  const std::size_t n = x.size();
  if (n == 0) throw DimensionError("softmax: empty input");
  Tensor<T> out(x.shape());
  T mx = x[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  T denom = T(0);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(x[i] - mx);
    denom += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= denom;
  if (detail::wants_tape(tape, {&x})) {
    tape->note_output(out);
    tape->record([x, out]() mutable {
      if (!x.requires_grad()) return;
      const T* g = out.grad();
      T* gx = x.grad();
      const std::size_t n = out.size();
      T dot = T(0);
      for (std::size_t i = 0; i < n; ++i) dot += g[i] * out[i];
      for (std::size_t i = 0; i < n; ++i) gx[i] += out[i] * (g[i] - dot);
    });
  }
  return out;
}

// Concatenates rank-1 tensors into one rank-1 tensor.
template <class T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, Tape<T>* tape = nullptr) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  Tensor<T> out(Shape{total});
  std::size_t at = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.size(); ++i) out[at + i] = p[i];
    at += p.size();
  }
  bool any_grad = false;
  for (const auto& p : parts) any_grad |= p.requires_grad();
  if (tape && any_grad) {
    tape->note_output(out);
    tape->record([parts, out]() mutable {
      const T* g = out.grad();
      std::size_t at = 0;
      for (auto& p : parts) {
        if (p.requires_grad()) {
          T* gp = p.grad();
          for (std::size_t i = 0; i < p.size(); ++i) gp[i] += g[at + i];
        }
        at += p.size();
      }
    });
  }
  return out;
}

// sum_t coeffs[t] * items[t]; all items share one shape, coeffs is rank-1
// with one entry per item.
template <class T>
Tensor<T> weighted_sum(const std::vector<Tensor<T>>& items, const Tensor<T>& coeffs,
                       Tape<T>* tape = nullptr) {
  if (items.empty()) throw DimensionError("weighted_sum: no items");
  if (coeffs.size() != items.size())
    throw DimensionError("weighted_sum: " + std::to_string(items.size()) + " items vs " +
                         std::to_string(coeffs.size()) + " coefficients");
  for (const auto& it : items) detail::check_same_shape("weighted_sum", items.front(), it);
  const std::size_t n = items.front().size();
  Tensor<T> out(items.front().shape());
  T* po = out.data();
  for (std::size_t t = 0; t < items.size(); ++t) {
    const T c = coeffs[t];
    const T* pi = items[t].data();
    for (std::size_t i = 0; i < n; ++i) po[i] += c * pi[i];
  }
  bool any_grad = coeffs.requires_grad();
  for (const auto& it : items) any_grad |= it.requires_grad();
  if (tape && any_grad) {
    tape->note_output(out);
    tape->record([items, coeffs, out, n]() mutable {
      const T* g = out.grad();
      for (std::size_t t = 0; t < items.size(); ++t) {
        if (items[t].requires_grad()) {
          const T c = coeffs[t];
          T* gi = items[t].grad();
          for (std::size_t i = 0; i < n; ++i) gi[i] += c * g[i];
        }
        if (coeffs.requires_grad()) {
          const T* pi = items[t].data();
          T acc = T(0);
          for (std::size_t i = 0; i < n; ++i) acc += pi[i] * g[i];
          coeffs.grad()[t] += acc;
        }
      }
    });
  }
  return out;
}

// Mean squared error between two same-shape tensors, as a scalar. The forward
// sum runs in double so the float lane matches the evaluation-side metric.
template <class T>
Tensor<T> mse_loss(const Tensor<T>& predicted, const Tensor<T>& target, Tape<T>* tape = nullptr) {
  detail::check_same_shape("mse_loss", predicted, target);
  const std::size_t n = predicted.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(predicted[i]) - static_cast<double>(target[i]);
    acc += d * d;
  }
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(acc / static_cast<double>(n)));
  if (detail::wants_tape(tape, {&predicted, &target})) {
    tape->note_output(out);
    tape->record([predicted, target, out, n]() mutable {
      const T g = out.grad()[0];
      const T s = g * T(2) / static_cast<T>(n);
      if (predicted.requires_grad()) {
        T* gp = predicted.grad();
        for (std::size_t i = 0; i < n; ++i) gp[i] += s * (predicted[i] - target[i]);
      }
      if (target.requires_grad()) {
        T* gt = target.grad();
        for (std::size_t i = 0; i < n; ++i) gt[i] -= s * (predicted[i] - target[i]);
      }
    });
  }
  return out;
}

}  // namespace foresee
