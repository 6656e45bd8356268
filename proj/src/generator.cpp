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

#include "eglr/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "eglr/checkpoint.hpp"
#include "eglr/errors.hpp"
#include "json.hpp"

namespace eglr {

namespace {

constexpr const char* kDecoderPrefix = "gen.dec.";

// Row `pos` of the sinusoidal table, bit-identical to the full-table path.
Tensor position_row(std::size_t pos, std::size_t d) {
  const Tensor table = sinusoidal_position_encoding(pos + 1, d);
  return Tensor::from({table.data().end() - static_cast<std::ptrdiff_t>(d), table.data().end()}, {1, d});
}

}  // namespace

// ---- model -----------------------------------------------------------------

GeneratorModel GeneratorModel::init(const EvaluatorModel& evaluator, std::uint64_t seed) {
  GeneratorModel g;
  g.config = evaluator.config;
  g.params.merge(evaluator.params.subset("shared."));
  Rng rng(seed);
  init_transformer_layer(g.params, kDecoderPrefix, g.config.model_width(), rng);
  return g;
}

GeneratorModel GeneratorModel::init(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  GeneratorModel g;
  g.config = config;
  Rng rng(seed);
  init_shared_features(g.params, config, rng);
  init_transformer_layer(g.params, kDecoderPrefix, config.model_width(), rng);
  return g;
}

ParameterSet GeneratorModel::skeleton(const ExperimentConfig& config) { return init(config, 0).params; }

void save_generator(const std::string& path, const GeneratorModel& model) {
  save_checkpoint(path, {ModelKind::kGenerator, model.config, model.params});
}

GeneratorModel load_generator(const std::string& path) {
  auto ckpt = load_checkpoint(path);
  if (ckpt.kind != ModelKind::kGenerator) {
    throw CheckpointError(path + ": expected a generator checkpoint, found " + to_string(ckpt.kind));
  }
  try {
    ckpt.config.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(path + ": embedded config is invalid: " + e.what());
  }
  require_same_layout(GeneratorModel::skeleton(ckpt.config), ckpt.params, path);
  return {std::move(ckpt.config), std::move(ckpt.params)};
}

// ---- building blocks -------------------------------------------------------

PoolEncoding encode_pool(const GeneratorModel& model, const World& world, int user_id,
                         std::span<const int> candidates) {
  if (candidates.empty()) throw std::invalid_argument("encode_pool: empty candidate pool");
  PoolEncoding enc;
  enc.user_id = user_id;
  enc.items.assign(candidates.begin(), candidates.end());
  std::sort(enc.items.begin(), enc.items.end());
  if (std::adjacent_find(enc.items.begin(), enc.items.end()) != enc.items.end()) {
    throw std::invalid_argument("encode_pool: candidate pool contains duplicate items");
  }
  NoGradGuard frozen;
  const std::vector<int> users(enc.items.size(), user_id);
  const Tensor joint = joint_embeddings(model.params, world, users, enc.items);
  enc.refined = relu(add_row(matmul(joint, model.params.get("shared.refine.w")),
                             model.params.get("shared.refine.b")));
  enc.context = sum_rows(enc.refined);
  return enc;
}

double effective_temperature(Stage stage, double tau0, double alpha) {
  if (!(tau0 > 0.0)) throw std::invalid_argument("tau0 must be positive");
  if (!(alpha >= 1.0)) throw std::invalid_argument("alpha must be >= 1");
  return stage == Stage::kReason ? tau0 * alpha : tau0 / alpha;
}

StepEntropy step_entropy(std::span<const double> logits, double tau0) {
  if (!(tau0 > 0.0)) throw std::invalid_argument("tau0 must be positive");
  if (logits.empty()) throw StateError("step_entropy: no candidates");
  StepEntropy out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  out.probs.resize(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.probs[i] = std::exp((logits[i] - mx) / tau0);
    z += out.probs[i];
  }
  for (auto& p : out.probs) p /= z;
  out.entropy = softmax_entropy(logits, tau0);
  return out;
}

Tensor candidate_logits(const Tensor& z, const Tensor& refined, std::span<const std::size_t> remaining) {
  if (remaining.empty()) throw StateError("candidate_logits: no remaining candidates");
  return matmul(z, transpose(gather_rows(refined, remaining)));
}

ReasoningToken build_reasoning_token(const Tensor& z, const Tensor& refined,
                                     std::span<const std::size_t> remaining, double tau0,
                                     double alpha) {
  const double tau = effective_temperature(Stage::kReason, tau0, alpha);
  const Tensor cand = gather_rows(refined, remaining);
  const Tensor a = softmax_rows(matmul(z, transpose(cand)), tau);
  return {matmul(a, cand), a.to_vector()};
}

std::size_t GenerationTrace::reason_steps() const {
  return static_cast<std::size_t>(std::count_if(steps.begin(), steps.end(),
                                                [](const StepRecord& s) { return s.kind == StepKind::kReason; }));
}

DecoderState init_decoder_state(const PoolEncoding& pool) {
  DecoderState s;
  s.sequence.push_back(pool.context);
  s.remaining.resize(pool.items.size());
  for (std::size_t i = 0; i < s.remaining.size(); ++i) s.remaining[i] = i;
  s.logprob_sum = Tensor::scalar(0.0);
  return s;
}

Tensor decode_step(const GeneratorModel& model, DecoderState& state, bool use_cache) {
  if (state.sequence.empty()) throw StateError("decode_step: empty sequence");
  const auto w = TransformerLayerWeights::bind(model.params, kDecoderPrefix);
  const std::size_t heads = model.config.model.heads;
  const std::size_t d = state.sequence[0].cols();
  if (use_cache) {
    if (state.processed == state.sequence.size()) {
      throw StateError("decode_step: no new token since the last step");
    }
    Tensor z;
    while (state.processed < state.sequence.size()) {
      const Tensor row = state.sequence[state.processed] + position_row(state.processed, d);
      z = transformer_decoder_step(row, w, heads, state.cache);
      ++state.processed;
    }
    return z;
  }
  const std::size_t n = state.sequence.size();
  const Tensor x = concat_rows(state.sequence) + sinusoidal_position_encoding(n, d);
  return slice_rows(transformer_decoder_layer(x, w, heads), n - 1, n);
}

// ---- rollouts --------------------------------------------------------------

GenerationResult generate_list(const GeneratorModel& model, const PoolEncoding& pool,
                               const GenerateOptions& options, Rng& rng) {
  const std::size_t k_len = options.list_len;
  const std::size_t m = pool.items.size();
  if (k_len == 0) throw std::invalid_argument("generate_list: K must be positive");
  if (k_len > m) {
    throw std::invalid_argument("generate_list: K = " + std::to_string(k_len) + " exceeds pool size M = " +
                                std::to_string(m));
  }
  if (!options.forced_items.empty() && options.forced_items.size() != k_len) {
    throw std::invalid_argument("generate_list: forced action list must have K items");
  }
  const auto& e = options.eglr;
  const double t_reason = effective_temperature(Stage::kReason, e.tau0, e.alpha);
  const double t_select = effective_temperature(Stage::kRecommend, e.tau0, e.alpha);

  DecoderState state = init_decoder_state(pool);
  GenerationResult out;
  while (state.selected.size() < k_len) {
    const std::size_t pos = state.selected.size();
    StepRecord rec;
    rec.position = pos;
    if (state.remaining.size() == 1) {
      // Nothing to decide: the last candidate is taken with probability 1.
      const int item = pool.items[state.remaining[0]];
      if (!options.forced_items.empty() && options.forced_items[pos] != item) {
        throw std::invalid_argument("generate_list: forced item is not available");
      }
      rec.kind = StepKind::kSelect;
      rec.temperature = t_select;
      rec.chosen_item = item;
      rec.logprob = 0.0;
      out.trace.steps.push_back(std::move(rec));
      state.selected.push_back(item);
      state.remaining.clear();
      state.rea_cnt = 0;
      continue;
    }
    const Tensor z = decode_step(model, state, e.kv_cache);
    const Tensor logits = candidate_logits(z, pool.refined, state.remaining);
    const double h = softmax_entropy(logits.data(), e.tau0);
    rec.entropy_before = h;
    if (h > e.entropy_threshold && state.rea_cnt < e.max_reason_steps) {
      auto rt = build_reasoning_token(z, pool.refined, state.remaining, e.tau0, e.alpha);
      state.sequence.push_back(rt.token);
      ++state.rea_cnt;
      rec.kind = StepKind::kReason;
      rec.temperature = t_reason;
      rec.attention_weights = std::move(rt.weights);
      out.trace.steps.push_back(std::move(rec));
      continue;
    }
    const Tensor logp = log_softmax_rows(logits, t_select);
    const auto lp = logp.data();
    std::size_t j = 0;
    if (!options.forced_items.empty()) {
      const int want = options.forced_items[pos];
      const auto it = std::find_if(state.remaining.begin(), state.remaining.end(),
                                   [&](std::size_t r) { return pool.items[r] == want; });
      if (it == state.remaining.end()) throw std::invalid_argument("generate_list: forced item is not available");
      j = static_cast<std::size_t>(it - state.remaining.begin());
    } else if (options.mode == DecodeMode::kGreedy) {
      // Remaining rows are in ascending id order, so the first maximum wins ties.
      j = static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    } else {
      const double u = rng.uniform();
      double cum = 0.0;
      j = lp.size() - 1;
      for (std::size_t i = 0; i < lp.size(); ++i) {
        cum += std::exp(lp[i]);
        if (u < cum) {
          j = i;
          break;
        }
      }
    }
    state.logprob_sum = state.logprob_sum + pick(logp, j);
    const std::size_t row = state.remaining[j];
    const int item = pool.items[row];
    rec.kind = StepKind::kSelect;
    rec.temperature = t_select;
    rec.chosen_item = item;
    rec.logprob = lp[j];
    out.trace.steps.push_back(std::move(rec));
    state.selected.push_back(item);
    state.remaining.erase(state.remaining.begin() + static_cast<std::ptrdiff_t>(j));
    state.rea_cnt = 0;
    if (state.selected.size() < k_len) {
      const std::size_t rows[] = {row};
      state.sequence.push_back(gather_rows(pool.refined, rows));
    }
  }
  out.list = std::move(state.selected);
  out.logprob_sum = state.logprob_sum;
  return out;
}

std::vector<GenerationResult> generate_group(const GeneratorModel& model, const PoolEncoding& pool,
                                             const GenerateOptions& options, std::size_t group_size,
                                             std::uint64_t master_seed) {
  if (group_size == 0) throw std::invalid_argument("generate_group: G must be >= 1");
  std::vector<GenerationResult> out;
  out.reserve(group_size);
  for (std::size_t g = 0; g < group_size; ++g) {
    Rng rng(child_seed(master_seed, g));
    out.push_back(generate_list(model, pool, options, rng));
  }
  return out;
}

std::string to_string(StepKind kind) { return kind == StepKind::kReason ? "REASON" : "SELECT"; }

void write_trace_jsonl(const std::string& path, const ExperimentConfig& config,
                       std::span<const GenerationTrace> traces) {
  using nlohmann::json;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << json{{"kind", "header"}, {"lists", traces.size()}, {"config", config.to_ini()}}.dump() << '\n';
  for (std::size_t t = 0; t < traces.size(); ++t) {
    for (const auto& s : traces[t].steps) {
      json j = {{"list", t},
                {"kind", to_string(s.kind)},
                {"position", s.position},
                {"entropy_before", s.entropy_before},
                {"temperature", s.temperature},
                {"chosen_item", s.chosen_item ? json(*s.chosen_item) : json(nullptr)},
                {"logprob", s.logprob ? json(*s.logprob) : json(nullptr)}};
      if (!s.attention_weights.empty()) j["attention_weights"] = s.attention_weights;
      out << j.dump() << '\n';
    }
  }
}

}  // namespace eglr
