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

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "eglr/evaluator.hpp"
#include "eglr/generator.hpp"
#include "eglr/optim.hpp"
#include "eglr/sim.hpp"

namespace eglr {

inline constexpr double kAdvantageEps = 1e-8;

/// sum_k (2^y_k - 1) / log2(k + 1), k from 1. Inputs must lie in [0, 1].
double reward_dcg(std::span<const double> y_point_hat);
/// Identity on (0, 1).
double reward_listwise(double y_cls_hat);

/// (r - mean) / (population std + 1e-8).
std::vector<double> group_advantages(std::span<const double> rewards);

struct GroupSample {
  std::vector<GenerationResult> rollouts;
  std::vector<double> rewards;
  std::vector<double> advantages;
};

/// -(1/G) sum_g logprob_sum_g * A_g, advantages held constant.
Tensor grpo_loss(const GroupSample& group);

/// Scores lists of one user with the frozen evaluator under `mode`.
std::vector<double> score_lists(const EvaluatorModel& evaluator, const World& world, int user_id,
                                std::span<const std::vector<int>> lists, RewardMode mode);

struct TrainLogRow {
  std::size_t iteration = 0;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  double mean_entropy = 0.0;
  double reason_steps_per_list = 0.0;
  double loss = 0.0;
};

void write_train_log_header(std::ostream& out);
void write_train_log_row(std::ostream& out, const TrainLogRow& row);

/// GRPO: iteration t uses pools[t % |pools|], samples G rollouts with the
/// current parameters, scores them with the frozen evaluator and takes one
/// Adam step on the decoder. Only "gen." parameters change.
std::vector<TrainLogRow> train_generator(GeneratorModel& generator, const EvaluatorModel& evaluator,
                                         const World& world,
                                         std::span<const CandidatePoolRecord> pools,
                                         std::size_t iterations,
                                         const std::function<void(const TrainLogRow&)>& on_iteration = {});

/// Mean reward over iterations [begin, end) of a log.
double window_mean_reward(std::span<const TrainLogRow> log, std::size_t begin, std::size_t end);

}  // namespace eglr
