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

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "eglr/rng.hpp"
#include "eglr/tensor.hpp"

namespace eglr {

inline constexpr double kLayerNormEps = 1e-5;

/// Named trainable tensors, iterated in lexicographic name order.
class ParameterSet {
 public:
  using Map = std::map<std::string, Tensor, std::less<>>;

  // Registers a leaf; the tensor is marked as requiring gradients.
  void add(std::string name, const Tensor& value);
  const Tensor& get(std::string_view name) const;
  Tensor& get(std::string_view name);
  bool contains(std::string_view name) const { return params_.find(name) != params_.end(); }
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  // Every parameter whose name starts with `prefix`.
  ParameterSet subset(std::string_view prefix) const;
  // Shares the tensors of `other` (same nodes, not copies).
  void merge(const ParameterSet& other);
  // Independent copy of every tensor.
  ParameterSet deep_copy() const;

  void zero_grad();

  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }
  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }

 private:
  Map params_;
};

/// Bitwise equality of names, shapes and values.
bool identical(const ParameterSet& a, const ParameterSet& b);

/// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) matrix of shape [fan_in x fan_out].
Tensor init_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// softmax(logits / tau) over a vector.
Tensor softmax_with_temperature(const Tensor& logits, double tau);

/// Shannon entropy (nats) of softmax(logits / tau); 0 log 0 = 0.
double softmax_entropy(std::span<const double> logits, double tau);

/// entry[k, 2i] = sin(k / 10000^(2i/dim)), entry[k, 2i+1] = cos(same).
Tensor sinusoidal_position_encoding(std::size_t length, std::size_t dim);

struct AttentionWeights {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  static AttentionWeights bind(const ParameterSet& params, std::string_view prefix);
};

struct TransformerLayerWeights {
  AttentionWeights attn;
  Tensor ln1_gamma, ln1_beta;
  Tensor ff_w1, ff_b1, ff_w2, ff_b2;
  Tensor ln2_gamma, ln2_beta;
  static TransformerLayerWeights bind(const ParameterSet& params, std::string_view prefix);
};

// Registers q/k/v/o projections under `prefix` + "wq" etc.
void init_attention(ParameterSet& params, const std::string& prefix, std::size_t d, Rng& rng);
// Attention block ("attn."), two layer norms and a 4d ReLU feed-forward.
void init_transformer_layer(ParameterSet& params, const std::string& prefix, std::size_t d,
                            Rng& rng);

/// Multi-head self-attention over `num_seqs` stacked sequences of equal length.
Tensor masked_multi_head_attention(const Tensor& seq, const AttentionWeights& w, std::size_t heads,
                                   bool causal, std::size_t num_seqs = 1,
                                   std::vector<double>* weights = nullptr);

/// Post-norm block: x = LN(x + attn(x)); x = LN(x + FF(x)). Non-causal.
Tensor transformer_encoder_layer(const Tensor& seq, const TransformerLayerWeights& w,
                                 std::size_t heads, std::size_t num_seqs = 1);

/// Same block with a causal mask.
Tensor transformer_decoder_layer(const Tensor& seq, const TransformerLayerWeights& w,
                                 std::size_t heads);

/// Cached keys and values of every row a decoder layer has processed.
struct LayerCache {
  Tensor keys;
  Tensor values;
  std::size_t length = 0;
};

/// Processes one new row of a causal decoder layer against the cache and
/// appends its key/value. Equivalent to the last row of
/// transformer_decoder_layer over all rows seen so far.
Tensor transformer_decoder_step(const Tensor& row, const TransformerLayerWeights& w,
                                std::size_t heads, LayerCache& cache);

}  // namespace eglr
