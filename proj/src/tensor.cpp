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

#include "eglr/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "eglr/errors.hpp"

namespace eglr {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

thread_local bool g_grad_enabled = true;

#ifdef NDEBUG
std::atomic<bool> g_anomaly{false};
#else
std::atomic<bool> g_anomaly{true};
#endif

using NodePtr = std::shared_ptr<detail::Node>;

std::size_t rows_of(const Shape& s) {
  return s.size() == 2 ? s[0] : 1;
}
std::size_t cols_of(const Shape& s) {
  return s.empty() ? 1 : s.back();
}

void check_finite(const std::vector<double>& v, const char* op) {
  if (!g_anomaly.load(std::memory_order_relaxed)) return;
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

// Builds the result node; history is recorded only when it can matter.
Tensor make_op(const char* op, Shape shape, std::vector<double> value,
               std::initializer_list<Tensor> inputs, std::function<void(detail::Node&)> fn) {
  check_finite(value, op);
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& t : inputs) any = any || t.requires_grad();
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(inputs.size());
      for (const auto& t : inputs) node->parents.push_back(t.node());
      node->backward = std::move(fn);
    }
  }
  return Tensor(std::move(node));
}

Tensor make_op_n(const char* op, Shape shape, std::vector<double> value,
                 std::span<const Tensor> inputs, std::function<void(detail::Node&)> fn) {
  check_finite(value, op);
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& t : inputs) any = any || t.requires_grad();
    if (any) {
      node->requires_grad = true;
      for (const auto& t : inputs) node->parents.push_back(t.node());
      node->backward = std::move(fn);
    }
  }
  return Tensor(std::move(node));
}

// Parent that wants a gradient, with its buffer ready; nullptr otherwise.
detail::Node* grad_target(detail::Node& self, std::size_t i) {
  auto* p = self.parents[i].get();
  if (!p->requires_grad) return nullptr;
  p->ensure_grad();
  return p;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

template <typename F, typename G>
Tensor unary(const char* op, const Tensor& a, F f, G dfdx) {
  const auto& x = a.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return make_op(op, a.shape(), std::move(out), {a}, [dfdx](detail::Node& self) {
    auto* p = grad_target(self, 0);
    if (!p) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      p->grad[i] += self.grad[i] * dfdx(p->value[i], self.value[i]);
    }
  });
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor() : node_(std::make_shared<detail::Node>()) {
  node_->value.assign(1, 0.0);
}

Tensor Tensor::from(std::vector<double> data, Shape shape, bool requires_grad) {
  if (shape.size() > 2) throw DimensionError("tensors are limited to rank 2");
  for (auto d : shape) {
    if (d == 0) throw DimensionError("zero-sized dimension in " + shape_str(shape));
  }
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("data length " + std::to_string(data.size()) + " does not match shape " +
                         shape_str(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  if (requires_grad) node->ensure_grad();
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return from(std::vector<double>(n, value), std::move(shape), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({value}, {}, requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  const auto n = values.size();
  return from(std::move(values), {n}, requires_grad);
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows,
                      bool requires_grad) {
  std::vector<double> data;
  const std::size_t cols = rows.size() ? rows.begin()->size() : 0;
  for (const auto& r : rows) {
    if (r.size() != cols) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), r.begin(), r.end());
  }
  return from(std::move(data), {rows.size(), cols}, requires_grad);
}

std::size_t Tensor::rows() const { return rows_of(node_->shape); }
std::size_t Tensor::cols() const { return cols_of(node_->shape); }

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

void Tensor::zero_grad() {
  if (node_->requires_grad) node_->grad.assign(node_->value.size(), 0.0);
}

Tensor Tensor::detach() const {
  return from(node_->value, node_->shape, false);
}

Tensor Tensor::clone(bool requires_grad) const {
  return from(node_->value, node_->shape, requires_grad);
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

void set_anomaly_detection(bool enabled) { g_anomaly.store(enabled); }
bool anomaly_detection() { return g_anomaly.load(); }

void backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw std::invalid_argument("backward: loss must be a single element, got shape " +
                                shape_str(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; graphs from long rollouts are deep.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      auto* p = node->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (auto* n : order) {
    if (n->backward) n->grad.assign(n->value.size(), 0.0);
  }
  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

// ---- elementwise -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return make_op("add", a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (auto* p = grad_target(self, k)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return make_op("sub", a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    if (auto* p = grad_target(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
    if (auto* p = grad_target(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return make_op("mul", a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    if (auto* p = grad_target(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i] * bv[i];
    }
    if (auto* p = grad_target(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i] * av[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  return unary(
      "scale", a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(
      "add_scalar", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor& a) {
  return unary(
      "square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return unary(
      "clamp", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

// ---- matrix ----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() == 0 || b.rank() != 2) {
    throw DimensionError("matmul expects [m x k] by [k x n], got " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul inner dimensions differ: " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  std::vector<double> out(m * n);
  MutMap(out.data(), m, n).noalias() = ConstMap(a.data().data(), m, k) *
                                       ConstMap(b.data().data(), k, n);
  return make_op("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](detail::Node& self) {
    ConstMap g(self.grad.data(), m, n);
    if (auto* p = grad_target(self, 0)) {
      MutMap(p->grad.data(), m, k).noalias() +=
          g * ConstMap(self.parents[1]->value.data(), k, n).transpose();
    }
    if (auto* p = grad_target(self, 1)) {
      MutMap(p->grad.data(), k, n).noalias() +=
          ConstMap(self.parents[0]->value.data(), m, k).transpose() * g;
    }
  });
}

Tensor transpose(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  MutMap(out.data(), n, m) = ConstMap(a.data().data(), m, n).transpose();
  return make_op("transpose", {n, m}, std::move(out), {a}, [m, n](detail::Node& self) {
    if (auto* p = grad_target(self, 0)) {
      MutMap(p->grad.data(), m, n) += ConstMap(self.grad.data(), n, m).transpose();
    }
  });
}

Tensor add_row(const Tensor& x, const Tensor& bias) {
  const std::size_t m = x.rows(), n = x.cols();
  if (bias.numel() != n) {
    throw DimensionError("add_row: bias " + shape_str(bias.shape()) + " for rows of width " +
                         std::to_string(n));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto& b = bias.data();
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += b[c];
  }
  return make_op("add_row", x.shape(), std::move(out), {x, bias}, [m, n](detail::Node& self) {
    if (auto* p = grad_target(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
    if (auto* p = grad_target(self, 1)) {
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) p->grad[c] += self.grad[r * n + c];
      }
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("reshape " + shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  return make_op("reshape", std::move(shape), a.to_vector(), {a}, [](detail::Node& self) {
    if (auto* p = grad_target(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
  });
}

// ---- reductions ------------------------------------------------------------

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double x : a.data()) s += x;
  return make_op("sum", {}, {s}, {a}, [](detail::Node& self) {
    if (auto* p = grad_target(self, 0)) {
      for (auto& g : p->grad) g += self.grad[0];
    }
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor sum_rows(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(n, 0.0);
  const auto& x = a.data();
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) out[c] += x[r * n + c];
  }
  return make_op("sum_rows", {1, n}, std::move(out), {a}, [m, n](detail::Node& self) {
    if (auto* p = grad_target(self, 0)) {
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) p->grad[r * n + c] += self.grad[c];
      }
    }
  });
}

Tensor mean_cols(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m, 0.0);
  const auto& x = a.data();
  for (std::size_t r = 0; r < m; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += x[r * n + c];
    out[r] = s / static_cast<double>(n);
  }
  return make_op("mean_cols", {m, 1}, std::move(out), {a}, [m, n](detail::Node& self) {
    if (auto* p = grad_target(self, 0)) {
      const double inv = 1.0 / static_cast<double>(n);
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) p->grad[r * n + c] += self.grad[r] * inv;
      }
    }
  });
}

// ---- indexing / assembly ---------------------------------------------------

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
  const std::size_t m = a.rows(), n = a.cols();
  if (rows.empty()) throw DimensionError("gather_rows: empty index list");
  std::vector<double> out(rows.size() * n);
  const auto& x = a.data();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m) {
      throw DimensionError("gather_rows: row " + std::to_string(rows[i]) + " out of " +
                           std::to_string(m));
    }
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(rows[i] * n), n,
                out.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return make_op("gather_rows", {rows.size(), n}, std::move(out), {a},
                 [idx = std::move(idx), n](detail::Node& self) {
                   auto* p = grad_target(self, 0);
                   if (!p) return;
                   for (std::size_t i = 0; i < idx.size(); ++i) {
                     for (std::size_t c = 0; c < n; ++c) p->grad[idx[i] * n + c] += self.grad[i * n + c];
                   }
                 });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin >= end || end > a.rows()) throw DimensionError("slice_rows: bad range");
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return gather_rows(a, idx);
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: nothing to concatenate");
  const std::size_t n = parts[0].cols();
  std::size_t m = 0;
  std::vector<double> out;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.cols() != n) throw DimensionError("concat_rows: column counts differ");
    offsets.push_back(out.size());
    out.insert(out.end(), p.data().begin(), p.data().end());
    m += p.rows();
  }
  return make_op_n("concat_rows", {m, n}, std::move(out), parts,
                   [offsets = std::move(offsets)](detail::Node& self) {
                     for (std::size_t k = 0; k < self.parents.size(); ++k) {
                       if (auto* p = grad_target(self, k)) {
                         for (std::size_t i = 0; i < p->grad.size(); ++i) {
                           p->grad[i] += self.grad[offsets[k] + i];
                         }
                       }
                     }
                   });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: nothing to concatenate");
  const std::size_t m = parts[0].rows();
  std::size_t n = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    if (p.rows() != m) throw DimensionError("concat_cols: row counts differ");
    widths.push_back(p.cols());
    n += p.cols();
  }
  std::vector<double> out(m * n);
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& x = parts[k].data();
    const std::size_t w = widths[k];
    for (std::size_t r = 0; r < m; ++r) {
      std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(r * w), w,
                  out.begin() + static_cast<std::ptrdiff_t>(r * n + off));
    }
    off += w;
  }
  return make_op_n("concat_cols", {m, n}, std::move(out), parts,
                   [widths = std::move(widths), m, n](detail::Node& self) {
                     std::size_t off = 0;
                     for (std::size_t k = 0; k < self.parents.size(); ++k) {
                       const std::size_t w = widths[k];
                       if (auto* p = grad_target(self, k)) {
                         for (std::size_t r = 0; r < m; ++r) {
                           for (std::size_t c = 0; c < w; ++c) {
                             p->grad[r * w + c] += self.grad[r * n + off + c];
                           }
                         }
                       }
                       off += w;
                     }
                   });
}

Tensor pick(const Tensor& a, std::size_t index) {
  if (index >= a.numel()) throw DimensionError("pick: index out of range");
  return make_op("pick", {}, {a[index]}, {a}, [index](detail::Node& self) {
    if (auto* p = grad_target(self, 0)) p->grad[index] += self.grad[0];
  });
}

// ---- normalisation / attention --------------------------------------------

Tensor softmax_rows(const Tensor& x, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("softmax temperature must be positive");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  const auto& v = x.data();
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = v.data() + r * n;
    double* o = out.data() + r * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      o[c] = std::exp((row[c] - mx) / tau);
      z += o[c];
    }
    for (std::size_t c = 0; c < n; ++c) o[c] /= z;
  }
  return make_op("softmax", x.shape(), std::move(out), {x}, [m, n, tau](detail::Node& self) {
    auto* p = grad_target(self, 0);
    if (!p) return;
    for (std::size_t r = 0; r < m; ++r) {
      const double* y = self.value.data() + r * n;
      const double* g = self.grad.data() + r * n;
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += y[c] * g[c];
      for (std::size_t c = 0; c < n; ++c) p->grad[r * n + c] += y[c] * (g[c] - dot) / tau;
    }
  });
}

Tensor log_softmax_rows(const Tensor& x, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("softmax temperature must be positive");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  const auto& v = x.data();
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = v.data() + r * n;
    double* o = out.data() + r * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) z += std::exp((row[c] - mx) / tau);
    const double lse = std::log(z);
    for (std::size_t c = 0; c < n; ++c) o[c] = (row[c] - mx) / tau - lse;
  }
  return make_op("log_softmax", x.shape(), std::move(out), {x}, [m, n, tau](detail::Node& self) {
    auto* p = grad_target(self, 0);
    if (!p) return;
    for (std::size_t r = 0; r < m; ++r) {
      const double* y = self.value.data() + r * n;
      const double* g = self.grad.data() + r * n;
      double gs = 0.0;
      for (std::size_t c = 0; c < n; ++c) gs += g[c];
      for (std::size_t c = 0; c < n; ++c) {
        p->grad[r * n + c] += (g[c] - std::exp(y[c]) * gs) / tau;
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t m = x.rows(), n = x.cols();
  if (gamma.numel() != n || beta.numel() != n) throw DimensionError("layer_norm: affine width");
  std::vector<double> out(m * n);
  auto xhat = std::make_shared<std::vector<double>>(m * n);
  auto inv_std = std::make_shared<std::vector<double>>(m);
  const auto& v = x.data();
  const auto& g = gamma.data();
  const auto& b = beta.data();
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = v.data() + r * n;
    double mu = 0.0;
    for (std::size_t c = 0; c < n; ++c) mu += row[c];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t c = 0; c < n; ++c) {
      const double h = (row[c] - mu) * is;
      (*xhat)[r * n + c] = h;
      out[r * n + c] = g[c] * h + b[c];
    }
  }
  return make_op("layer_norm", x.shape(), std::move(out), {x, gamma, beta},
                 [m, n, xhat, inv_std](detail::Node& self) {
                   const auto& gv = self.parents[1]->value;
                   if (auto* pg = grad_target(self, 1)) {
                     for (std::size_t r = 0; r < m; ++r) {
                       for (std::size_t c = 0; c < n; ++c) {
                         pg->grad[c] += self.grad[r * n + c] * (*xhat)[r * n + c];
                       }
                     }
                   }
                   if (auto* pb = grad_target(self, 2)) {
                     for (std::size_t r = 0; r < m; ++r) {
                       for (std::size_t c = 0; c < n; ++c) pb->grad[c] += self.grad[r * n + c];
                     }
                   }
                   if (auto* px = grad_target(self, 0)) {
                     const double inv_n = 1.0 / static_cast<double>(n);
                     for (std::size_t r = 0; r < m; ++r) {
                       double s1 = 0.0, s2 = 0.0;
                       for (std::size_t c = 0; c < n; ++c) {
                         const double dh = self.grad[r * n + c] * gv[c];
                         s1 += dh;
                         s2 += dh * (*xhat)[r * n + c];
                       }
                       for (std::size_t c = 0; c < n; ++c) {
                         const double dh = self.grad[r * n + c] * gv[c];
                         px->grad[r * n + c] +=
                             (*inv_std)[r] * (dh - s1 * inv_n - (*xhat)[r * n + c] * s2 * inv_n);
                       }
                     }
                   }
                 });
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                 std::size_t num_seqs, bool causal, std::vector<double>* weights) {
  const std::size_t d = q.cols();
  if (heads == 0 || d % heads != 0) {
    throw std::invalid_argument("attention: width " + std::to_string(d) +
                                " not divisible by heads " + std::to_string(heads));
  }
  if (k.cols() != d || v.cols() != d || k.rows() != v.rows()) {
    throw DimensionError("attention: q/k/v widths differ");
  }
  if (num_seqs == 0 || q.rows() % num_seqs != 0 || k.rows() % num_seqs != 0) {
    throw DimensionError("attention: rows not divisible by sequence count");
  }
  const std::size_t tq = q.rows() / num_seqs, tk = k.rows() / num_seqs;
  if (tq > tk) throw DimensionError("attention: more queries than keys");
  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t offset = tk - tq;

  auto probs = std::make_shared<std::vector<double>>(num_seqs * heads * tq * tk, 0.0);
  std::vector<double> out(q.rows() * d, 0.0);
  const auto& qv = q.data();
  const auto& kv = k.data();
  const auto& vv = v.data();
  std::vector<double> scores(tk);
  for (std::size_t s = 0; s < num_seqs; ++s) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < tq; ++i) {
        const std::size_t limit = causal ? offset + i + 1 : tk;
        const double* qi = qv.data() + (s * tq + i) * d + h * dh;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < limit; ++j) {
          const double* kj = kv.data() + (s * tk + j) * d + h * dh;
          double dot = 0.0;
          for (std::size_t c = 0; c < dh; ++c) dot += qi[c] * kj[c];
          scores[j] = dot * inv_sqrt;
          mx = std::max(mx, scores[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < limit; ++j) {
          scores[j] = std::exp(scores[j] - mx);
          z += scores[j];
        }
        double* pr = probs->data() + ((s * heads + h) * tq + i) * tk;
        double* oi = out.data() + (s * tq + i) * d + h * dh;
        for (std::size_t j = 0; j < limit; ++j) {
          pr[j] = scores[j] / z;
          const double* vj = vv.data() + (s * tk + j) * d + h * dh;
          for (std::size_t c = 0; c < dh; ++c) oi[c] += pr[j] * vj[c];
        }
      }
    }
  }
  if (weights) *weights = *probs;

  return make_op(
      "attention", {q.rows(), d}, std::move(out), {q, k, v},
      [=](detail::Node& self) {
        auto* pq = grad_target(self, 0);
        auto* pk = grad_target(self, 1);
        auto* pv = grad_target(self, 2);
        const auto& qv = self.parents[0]->value;
        const auto& kv = self.parents[1]->value;
        const auto& vv = self.parents[2]->value;
        std::vector<double> dp(tk);
        for (std::size_t s = 0; s < num_seqs; ++s) {
          for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t i = 0; i < tq; ++i) {
              const std::size_t limit = causal ? offset + i + 1 : tk;
              const double* pr = probs->data() + ((s * heads + h) * tq + i) * tk;
              const double* go = self.grad.data() + (s * tq + i) * d + h * dh;
              double weighted = 0.0;
              for (std::size_t j = 0; j < limit; ++j) {
                const std::size_t vrow = (s * tk + j) * d + h * dh;
                double dot = 0.0;
                for (std::size_t c = 0; c < dh; ++c) dot += go[c] * vv[vrow + c];
                dp[j] = dot;
                weighted += pr[j] * dot;
                if (pv) {
                  for (std::size_t c = 0; c < dh; ++c) pv->grad[vrow + c] += pr[j] * go[c];
                }
              }
              const std::size_t qrow = (s * tq + i) * d + h * dh;
              for (std::size_t j = 0; j < limit; ++j) {
                const double ds = pr[j] * (dp[j] - weighted) * inv_sqrt;
                const std::size_t krow = (s * tk + j) * d + h * dh;
                if (pq) {
                  for (std::size_t c = 0; c < dh; ++c) pq->grad[qrow + c] += ds * kv[krow + c];
                }
                if (pk) {
                  for (std::size_t c = 0; c < dh; ++c) pk->grad[krow + c] += ds * qv[qrow + c];
                }
              }
            }
          }
        }
      });
}

}  // namespace eglr
