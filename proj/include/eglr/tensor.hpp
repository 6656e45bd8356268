// Copyright 2026 The EGLR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file tensor.hpp
 * @brief Dense float64 tensors with tape-free reverse-mode differentiation.
 *
 * A Tensor is a cheap handle onto a graph node. Operations record their
 * inputs when gradient recording is on and any input requires a gradient;
 * backward() walks the recorded graph in reverse topological order.
 *
 * Shapes are rank 0 (scalar), 1 (vector, treated as a 1 x n row by matrix
 * ops) or 2 (row-major matrix). Nothing here broadcasts implicitly; the few
 * broadcasts the models need have dedicated ops (add_row, scale).
 */

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace eglr {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor();

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(std::vector<double> data, Shape shape, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                       bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }
  // Matrix view: rank-1 tensors are a single row, scalars are 1 x 1.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return node_->value; }
  // Direct write access; only meaningful on leaves (parameters, inputs).
  std::span<double> mutable_data() { return node_->value; }
  double item() const;
  double operator[](std::size_t i) const { return node_->value[i]; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  std::vector<double> to_vector() const { return node_->value; }

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return !node_->backward; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad();

  // Same values, no history, no gradient.
  Tensor detach() const;
  // Deep copy as a fresh leaf.
  Tensor clone(bool requires_grad = false) const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Gradient recording is on by default; this switches it off for the
/// current thread while in scope.
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

/// When on, every op checks its output for NaN/Inf and throws NumericError.
/// Defaults to on in builds without NDEBUG.
void set_anomaly_detection(bool enabled);
bool anomaly_detection();

/// Reverse-mode sweep from a single-element tensor. Leaf gradients
/// accumulate; call zero_grad on parameters between steps.
void backward(const Tensor& loss);

// ---- elementwise -----------------------------------------------------------
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
// Values outside [lo, hi] are clipped and pass no gradient.
Tensor clamp(const Tensor& a, double lo, double hi);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator-(double s, const Tensor& a) { return add_scalar(neg(a), s); }

// ---- matrix ----------------------------------------------------------------
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// x[m x n] + bias[n] broadcast over rows.
Tensor add_row(const Tensor& x, const Tensor& bias);
Tensor reshape(const Tensor& a, Shape shape);

// ---- reductions ------------------------------------------------------------
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Column-wise sum over rows, accumulated in row order: [m x n] -> [1 x n].
Tensor sum_rows(const Tensor& a);
// Per-row mean: [m x n] -> [m x 1].
Tensor mean_cols(const Tensor& a);

// ---- indexing / assembly ---------------------------------------------------
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
// Single element as a scalar.
Tensor pick(const Tensor& a, std::size_t index);

// ---- normalisation / attention --------------------------------------------
// Row-wise softmax(x / tau).
Tensor softmax_rows(const Tensor& x, double tau);
// Row-wise log softmax(x / tau).
Tensor log_softmax_rows(const Tensor& x, double tau);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

/// Scaled dot-product attention over `num_seqs` independent sequences.
/// q holds num_seqs blocks of Tq rows, k and v num_seqs blocks of Tk rows
/// (Tq <= Tk). With `causal`, query i of a block sits at absolute position
/// Tk - Tq + i and sees keys 0..that position only. Columns are split into
/// `heads` contiguous groups. If `weights` is non-null it receives the
/// attention probabilities laid out [seq][head][query][key] (masked keys 0).
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                 std::size_t num_seqs, bool causal, std::vector<double>* weights = nullptr);

}  // namespace eglr
