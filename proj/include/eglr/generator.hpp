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
 * @file generator.hpp
 * @brief Autoregressive list generator with entropy-triggered reasoning tokens.
 *
 * The pool is encoded once (refined joint embeddings plus a sum-pooled
 * context). Decoding alternates between two kinds of steps: when the
 * selection entropy at the base temperature is above the threshold and the
 * reasoning budget allows, a reasoning token (a soft mixture of the remaining
 * candidates) is appended; otherwise an item is chosen at the sharpened
 * temperature and its embedding appended.
 *
 * Parameter names: the "shared." tables of the evaluator (frozen here) and
 * the decoder layer under "gen.dec.".
 */

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eglr/config.hpp"
#include "eglr/evaluator.hpp"
#include "eglr/nn.hpp"
#include "eglr/rng.hpp"
#include "eglr/sim.hpp"
#include "eglr/tensor.hpp"

namespace eglr {

struct GeneratorModel {
  ExperimentConfig config;
  ParameterSet params;

  /// Shares the "shared." tensors of `evaluator` and adds a fresh decoder.
  static GeneratorModel init(const EvaluatorModel& evaluator, std::uint64_t seed);
  /// Stand-alone generator with its own shared features (tests, probes).
  static GeneratorModel init(const ExperimentConfig& config, std::uint64_t seed);
  static ParameterSet skeleton(const ExperimentConfig& config);

  /// The parameters GRPO updates ("gen." prefix).
  ParameterSet trainable() const { return params.subset("gen."); }
};

void save_generator(const std::string& path, const GeneratorModel& model);
GeneratorModel load_generator(const std::string& path);

struct PoolEncoding {
  int user_id = 0;
  std::vector<int> items;  // ascending item id; row i of `refined` is items[i]
  Tensor refined;          // [M x d]
  Tensor context;          // c_gen, [1 x d]
};

/// ReLU(E W + b) over the pool's joint embeddings and their column sum.
/// Rows are canonicalized to ascending item id, so any permutation of
/// `candidates` yields bit-identical results. The shared features are frozen
/// for the generator, so nothing here is recorded for backward.
PoolEncoding encode_pool(const GeneratorModel& model, const World& world, int user_id,
                         std::span<const int> candidates);

enum class Stage { kReason, kRecommend };

/// kReason: tau0 * alpha, kRecommend: tau0 / alpha. Requires alpha >= 1.
double effective_temperature(Stage stage, double tau0, double alpha);

struct StepEntropy {
  std::vector<double> probs;
  double entropy = 0.0;
};

/// softmax(logits / tau0) and its entropy in nats.
StepEntropy step_entropy(std::span<const double> logits, double tau0);

/// l_i = z . e_i for every remaining row index, in the given (ascending) order.
/// Returns [1 x |remaining|]. Throws StateError when `remaining` is empty.
Tensor candidate_logits(const Tensor& z, const Tensor& refined, std::span<const std::size_t> remaining);

struct ReasoningToken {
  Tensor token;                 // [1 x d]
  std::vector<double> weights;  // over `remaining`
};

/// a = softmax(z . e_i / (tau0 alpha)), token = sum_i a_i e_i.
ReasoningToken build_reasoning_token(const Tensor& z, const Tensor& refined,
                                     std::span<const std::size_t> remaining, double tau0,
                                     double alpha);

enum class StepKind { kReason, kSelect };

struct StepRecord {
  StepKind kind = StepKind::kSelect;
  std::size_t position = 0;  // index of the upcoming (or current) selection
  double entropy_before = 0.0;
  double temperature = 0.0;
  std::optional<int> chosen_item;
  std::vector<double> attention_weights;  // REASON steps
  std::optional<double> logprob;          // SELECT steps
};

struct GenerationTrace {
  std::vector<StepRecord> steps;
  std::size_t reason_steps() const;
};

/// Mutable state of one rollout.
struct DecoderState {
  std::vector<Tensor> sequence;  // S; sequence[0] is the pool context
  LayerCache cache;
  std::size_t processed = 0;       // rows of S already fed through the cache
  std::vector<std::size_t> remaining;  // row indices into PoolEncoding::refined
  std::size_t rea_cnt = 0;
  std::vector<int> selected;
  Tensor logprob_sum;  // scalar
};

DecoderState init_decoder_state(const PoolEncoding& pool);

/// Decoder output for the newest row of S. With `use_cache` only rows not yet
/// processed go through the layer; otherwise the whole sequence is recomputed.
Tensor decode_step(const GeneratorModel& model, DecoderState& state, bool use_cache);

enum class DecodeMode { kSample, kGreedy };

struct GenerationResult {
  std::vector<int> list;
  GenerationTrace trace;
  Tensor logprob_sum;  // scalar; differentiable when grad recording is on
};

struct GenerateOptions {
  std::size_t list_len = 0;  // K
  EglrConfig eglr;
  DecodeMode mode = DecodeMode::kSample;
  // When set, the i-th selection takes forced_items[i] instead of sampling
  // (used to replay a rollout under perturbed parameters).
  std::span<const int> forced_items;

  static GenerateOptions from(const ExperimentConfig& config, DecodeMode mode) {
    return {config.task.list_len, config.eglr, mode, {}};
  }
};

GenerationResult generate_list(const GeneratorModel& model, const PoolEncoding& pool,
                               const GenerateOptions& options, Rng& rng);

/// G rollouts; rollout g draws from Rng(child_seed(master_seed, g)).
std::vector<GenerationResult> generate_group(const GeneratorModel& model, const PoolEncoding& pool,
                                             const GenerateOptions& options, std::size_t group_size,
                                             std::uint64_t master_seed);

/// JSONL export: a header line with the config, then one line per step.
void write_trace_jsonl(const std::string& path, const ExperimentConfig& config,
                       std::span<const GenerationTrace> traces);

std::string to_string(StepKind kind);

}  // namespace eglr
