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
 * @file evaluator.hpp
 * @brief List evaluator: shared feature embeddings, a transformer encoder over
 * [cls, items], a per-item click head and a list utility head.
 *
 * Parameter names:
 *   shared.emb.item.<f>, shared.emb.user.<f>   categorical tables [vocab x 16]
 *   shared.refine.w, shared.refine.b           refine MLP (used by the generator)
 *   eval.cls, eval.enc.<l>.*, eval.point.{w,b}, eval.list.{w,b}
 */

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "eglr/config.hpp"
#include "eglr/nn.hpp"
#include "eglr/sim.hpp"
#include "eglr/tensor.hpp"

namespace eglr {

inline constexpr double kPredictionClamp = 1e-12;

/// Vocabulary size of every categorical field, id field first.
std::vector<std::size_t> user_vocab_sizes(const WorldConfig& c);
std::vector<std::size_t> item_vocab_sizes(const WorldConfig& c);

/// Registers the embedding tables and the refine MLP under "shared.".
void init_shared_features(ParameterSet& params, const ExperimentConfig& config, Rng& rng);

/// Joint embeddings e_base(item) ++ e_u(user) for each (user, item) pair: [n x d].
Tensor joint_embeddings(const ParameterSet& params, const World& world,
                        std::span<const int> users, std::span<const int> items);

struct EvaluatorModel {
  ExperimentConfig config;
  ParameterSet params;

  static EvaluatorModel init(const ExperimentConfig& config, std::uint64_t seed);
  // Parameter names and shapes the architecture in `config` requires.
  static ParameterSet skeleton(const ExperimentConfig& config);
};

void save_evaluator(const std::string& path, const EvaluatorModel& model);
/// Throws CheckpointError for a wrong kind or an incompatible architecture.
EvaluatorModel load_evaluator(const std::string& path);

/// Outputs of a batch of B lists of equal length K.
struct EvaluatorOutput {
  Tensor y_point;  // [B*K x 1], list-major
  Tensor y_cls;    // [B x 1]
};

/// Input sequence of one list: row 0 is e_cls, row k the joint embedding of
/// item k plus position k-1. Shape [(K+1) x d].
Tensor build_eval_input(const EvaluatorModel& model, const World& world, int user_id,
                        std::span<const int> items);

EvaluatorOutput evaluator_forward(const EvaluatorModel& model, const World& world, int user_id,
                                  std::span<const int> items);

/// Batched forward; all lists must have the same length.
EvaluatorOutput evaluator_forward_batch(const EvaluatorModel& model, const World& world,
                                        std::span<const int> users,
                                        std::span<const std::vector<int>> lists);

/// -(1/n) sum[y log p + (1-y) log(1-p)] with p clamped to [1e-12, 1-1e-12].
Tensor loss_point(const Tensor& y_point_hat, std::span<const int> y_point);
/// Mean over lists of -(y log p + log(1-p)).
Tensor loss_list(const Tensor& y_cls_hat, std::span<const double> y_list);

struct EvalLoss {
  Tensor point;
  Tensor list;
  Tensor total;  // point + list
};

EvalLoss evaluator_loss(const EvaluatorModel& model, const World& world,
                        std::span<const InteractionRecord> batch);

struct EpochLoss {
  double point = 0.0;
  double list = 0.0;
  double total = 0.0;
};

/// Mini-batch Adam (config.optim) over `records` for `epochs` epochs.
/// Returns the mean losses of every epoch.
std::vector<EpochLoss> pretrain_evaluator(EvaluatorModel& model, const World& world,
                                          std::span<const InteractionRecord> records,
                                          std::size_t epochs,
                                          const std::function<void(std::size_t, const EpochLoss&)>&
                                              on_epoch = {});

/// Mean losses over `records` without touching gradients.
EpochLoss evaluate_losses(const EvaluatorModel& model, const World& world,
                          std::span<const InteractionRecord> records);

}  // namespace eglr
