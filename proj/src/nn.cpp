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

#include "eglr/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "eglr/errors.hpp"

namespace eglr {

void ParameterSet::add(std::string name, const Tensor& value) {
  if (params_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  Tensor leaf = value.requires_grad() && value.is_leaf() ? value : value.clone(true);
  params_.emplace(std::move(name), std::move(leaf));
}

const Tensor& ParameterSet::get(std::string_view name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + std::string(name));
  return it->second;
}

Tensor& ParameterSet::get(std::string_view name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + std::string(name));
  return it->second;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.numel();
  return n;
}

ParameterSet ParameterSet::subset(std::string_view prefix) const {
  ParameterSet out;
  for (const auto& [name, t] : params_) {
    if (std::string_view(name).starts_with(prefix)) out.params_.emplace(name, t);
  }
  return out;
}

void ParameterSet::merge(const ParameterSet& other) {
  for (const auto& [name, t] : other.params_) {
    if (params_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    params_.emplace(name, t);
  }
}

ParameterSet ParameterSet::deep_copy() const {
  ParameterSet out;
  for (const auto& [name, t] : params_) out.params_.emplace(name, t.clone(true));
  return out;
}

void ParameterSet::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

bool identical(const ParameterSet& a, const ParameterSet& b) {
  if (a.size() != b.size()) return false;
  auto ia = a.begin();
  auto ib = b.begin();
  for (; ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first || ia->second.shape() != ib->second.shape()) return false;
    const auto x = ia->second.data();
    const auto y = ib->second.data();
    if (!std::equal(x.begin(), x.end(), y.begin())) return false;
  }
  return true;
}

Tensor init_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> w(fan_in * fan_out);
  for (auto& x : w) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(w), {fan_in, fan_out}, true);
}

Tensor softmax_with_temperature(const Tensor& logits, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (logits.rows() != 1) throw DimensionError("softmax_with_temperature expects a vector");
  return softmax_rows(logits, tau);
}

double softmax_entropy(std::span<const double> logits, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (logits.empty()) throw StateError("entropy of an empty distribution");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp((logits[i] - mx) / tau);
    z += p[i];
  }
  double h = 0.0;
  for (double& x : p) {
    x /= z;
    if (x > 0.0) h -= x * std::log(x);
  }
  // Rounding can nudge h just outside its exact range.
  return std::clamp(h, 0.0, std::log(static_cast<double>(p.size())));
}

Tensor sinusoidal_position_encoding(std::size_t length, std::size_t dim) {
  if (length == 0) throw std::invalid_argument("position encoding length must be >= 1");
  if (dim == 0 || dim % 2 != 0) throw std::invalid_argument("position encoding dim must be even");
  std::vector<double> pe(length * dim);
  for (std::size_t k = 0; k < length; ++k) {
    for (std::size_t i = 0; i < dim / 2; ++i) {
      const double freq =
          std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(dim));
      const double angle = static_cast<double>(k) / freq;
      pe[k * dim + 2 * i] = std::sin(angle);
      pe[k * dim + 2 * i + 1] = std::cos(angle);
    }
  }
  return Tensor::from(std::move(pe), {length, dim});
}

AttentionWeights AttentionWeights::bind(const ParameterSet& p, std::string_view prefix) {
  const std::string s(prefix);
  return {p.get(s + "wq"), p.get(s + "bq"), p.get(s + "wk"), p.get(s + "bk"),
          p.get(s + "wv"), p.get(s + "bv"), p.get(s + "wo"), p.get(s + "bo")};
}

TransformerLayerWeights TransformerLayerWeights::bind(const ParameterSet& p,
                                                      std::string_view prefix) {
  const std::string s(prefix);
  return {AttentionWeights::bind(p, s + "attn."),
          p.get(s + "ln1.gamma"),
          p.get(s + "ln1.beta"),
          p.get(s + "ff.w1"),
          p.get(s + "ff.b1"),
          p.get(s + "ff.w2"),
          p.get(s + "ff.b2"),
          p.get(s + "ln2.gamma"),
          p.get(s + "ln2.beta")};
}

void init_attention(ParameterSet& params, const std::string& prefix, std::size_t d, Rng& rng) {
  for (const char* m : {"q", "k", "v", "o"}) {
    params.add(prefix + "w" + m, init_weight(d, d, rng));
    params.add(prefix + "b" + m, Tensor::zeros({d}, true));
  }
}

void init_transformer_layer(ParameterSet& params, const std::string& prefix, std::size_t d,
                            Rng& rng) {
  init_attention(params, prefix + "attn.", d, rng);
  params.add(prefix + "ln1.gamma", Tensor::full({d}, 1.0, true));
  params.add(prefix + "ln1.beta", Tensor::zeros({d}, true));
  params.add(prefix + "ff.w1", init_weight(d, 4 * d, rng));
  params.add(prefix + "ff.b1", Tensor::zeros({4 * d}, true));
  params.add(prefix + "ff.w2", init_weight(4 * d, d, rng));
  params.add(prefix + "ff.b2", Tensor::zeros({d}, true));
  params.add(prefix + "ln2.gamma", Tensor::full({d}, 1.0, true));
  params.add(prefix + "ln2.beta", Tensor::zeros({d}, true));
}

namespace {

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_row(matmul(x, w), b);
}

Tensor feed_forward_block(const Tensor& x, const TransformerLayerWeights& w) {
  const Tensor ff = linear(relu(linear(x, w.ff_w1, w.ff_b1)), w.ff_w2, w.ff_b2);
  return layer_norm(x + ff, w.ln2_gamma, w.ln2_beta, kLayerNormEps);
}

Tensor transformer_layer(const Tensor& seq, const TransformerLayerWeights& w, std::size_t heads,
                         bool causal, std::size_t num_seqs) {
  const Tensor a = masked_multi_head_attention(seq, w.attn, heads, causal, num_seqs);
  const Tensor x = layer_norm(seq + a, w.ln1_gamma, w.ln1_beta, kLayerNormEps);
  return feed_forward_block(x, w);
}

}  // namespace

Tensor masked_multi_head_attention(const Tensor& seq, const AttentionWeights& w, std::size_t heads,
                                   bool causal, std::size_t num_seqs,
                                   std::vector<double>* weights) {
  const std::size_t d = seq.cols();
  if (heads == 0 || d % heads != 0) {
    throw std::invalid_argument("model width " + std::to_string(d) + " not divisible by " +
                                std::to_string(heads) + " heads");
  }
  const Tensor q = linear(seq, w.wq, w.bq);
  const Tensor k = linear(seq, w.wk, w.bk);
  const Tensor v = linear(seq, w.wv, w.bv);
  const Tensor ctx = attention(q, k, v, heads, num_seqs, causal, weights);
  return linear(ctx, w.wo, w.bo);
}

Tensor transformer_encoder_layer(const Tensor& seq, const TransformerLayerWeights& w,
                                 std::size_t heads, std::size_t num_seqs) {
  return transformer_layer(seq, w, heads, false, num_seqs);
}

Tensor transformer_decoder_layer(const Tensor& seq, const TransformerLayerWeights& w,
                                 std::size_t heads) {
  return transformer_layer(seq, w, heads, true, 1);
}

Tensor transformer_decoder_step(const Tensor& row, const TransformerLayerWeights& w,
                                std::size_t heads, LayerCache& cache) {
  if (row.rows() != 1) throw DimensionError("decoder step expects a single row");
  const std::size_t d = row.cols();
  if (heads == 0 || d % heads != 0) {
    throw std::invalid_argument("model width not divisible by heads");
  }
  const Tensor q = linear(row, w.attn.wq, w.attn.bq);
  const Tensor k = linear(row, w.attn.wk, w.attn.bk);
  const Tensor v = linear(row, w.attn.wv, w.attn.bv);
  if (cache.length == 0) {
    cache.keys = k;
    cache.values = v;
  } else {
    const Tensor ks[] = {cache.keys, k};
    const Tensor vs[] = {cache.values, v};
    cache.keys = concat_rows(ks);
    cache.values = concat_rows(vs);
  }
  ++cache.length;
  const Tensor ctx = attention(q, cache.keys, cache.values, heads, 1, true);
  const Tensor a = linear(ctx, w.attn.wo, w.attn.bo);
  const Tensor x = layer_norm(row + a, w.ln1_gamma, w.ln1_beta, kLayerNormEps);
  return feed_forward_block(x, w);
}

}  // namespace eglr
