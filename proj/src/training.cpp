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

#include "eglr/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "eglr/errors.hpp"
#include "eglr/metrics.hpp"

namespace eglr {

double reward_dcg(std::span<const double> y_point_hat) {
  double s = 0.0;
  for (std::size_t k = 0; k < y_point_hat.size(); ++k) {
    const double y = y_point_hat[k];
    if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("reward_dcg: scores must lie in [0, 1]");
    s += (std::exp2(y) - 1.0) / std::log2(static_cast<double>(k) + 2.0);
  }
  return s;
}

double reward_listwise(double y_cls_hat) {
  if (!(y_cls_hat > 0.0 && y_cls_hat < 1.0)) throw std::invalid_argument("reward_listwise: expected a value in (0, 1)");
  return y_cls_hat;
}

std::vector<double> group_advantages(std::span<const double> rewards) {
  if (rewards.empty()) throw std::invalid_argument("group_advantages: empty group");
  // The rounded mean of equal values can differ from them by an ulp.
  if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; })) {
    return std::vector<double>(rewards.size(), 0.0);
  }
  const auto g = static_cast<double>(rewards.size());
  const double mu = std::accumulate(rewards.begin(), rewards.end(), 0.0) / g;
  double var = 0.0;
  for (double r : rewards) var += (r - mu) * (r - mu);
  const double sd = std::sqrt(var / g);
  std::vector<double> a(rewards.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = (rewards[i] - mu) / (sd + kAdvantageEps);
  return a;
}

Tensor grpo_loss(const GroupSample& group) {
  if (group.rollouts.empty()) throw std::invalid_argument("grpo_loss: empty group");
  if (group.advantages.size() != group.rollouts.size()) {
    throw std::invalid_argument("grpo_loss: one advantage per rollout required");
  }
  const double inv_g = 1.0 / static_cast<double>(group.rollouts.size());
  Tensor loss = Tensor::scalar(0.0);
  for (std::size_t g = 0; g < group.rollouts.size(); ++g) {
    loss = loss + group.rollouts[g].logprob_sum * (-group.advantages[g] * inv_g);
  }
  return loss;
}

std::vector<double> score_lists(const EvaluatorModel& evaluator, const World& world, int user_id,
                                std::span<const std::vector<int>> lists, RewardMode mode) {
  if (lists.empty()) return {};
  NoGradGuard frozen;
  const std::vector<int> users(lists.size(), user_id);
  const auto out = evaluator_forward_batch(evaluator, world, users, lists);
  std::vector<double> scores(lists.size());
  const std::size_t k_len = lists[0].size();
  const auto yp = out.y_point.data();
  for (std::size_t b = 0; b < lists.size(); ++b) {
    scores[b] = mode == RewardMode::kDcg ? reward_dcg(yp.subspan(b * k_len, k_len))
                                         : reward_listwise(out.y_cls[b]);
  }
  return scores;
}

void write_train_log_header(std::ostream& out) {
  out << "iteration,mean_reward,std_reward,mean_entropy,reason_steps_per_list,loss\n";
}

void write_train_log_row(std::ostream& out, const TrainLogRow& row) {
  out << row.iteration << ',' << format_number(row.mean_reward) << ',' << format_number(row.std_reward) << ','
      << format_number(row.mean_entropy) << ',' << format_number(row.reason_steps_per_list) << ',' << format_number(row.loss) << '\n';
}

std::vector<TrainLogRow> train_generator(GeneratorModel& generator, const EvaluatorModel& evaluator,
                                         const World& world,
                                         std::span<const CandidatePoolRecord> pools,
                                         std::size_t iterations,
                                         const std::function<void(const TrainLogRow&)>& on_iteration) {
  if (pools.empty()) throw std::invalid_argument("train_generator: no candidate pools");
  const auto& cfg = generator.config;
  const auto options = GenerateOptions::from(cfg, DecodeMode::kSample);
  for (const auto& p : pools) {
    if (p.candidates.size() < options.list_len) {
      throw std::invalid_argument("train_generator: pool smaller than K");
    }
  }
  ParameterSet trainable = generator.trainable();
  auto state = OptimizerState::from(cfg.optim);
  const std::uint64_t run_seed = child_seed(cfg.seed, 0x67656e);
  std::vector<TrainLogRow> log;
  log.reserve(iterations);
  for (std::size_t it = 0; it < iterations; ++it) {
    const auto& pool = pools[it % pools.size()];
    const auto enc = encode_pool(generator, world, pool.user_id, pool.candidates);
    GroupSample group;
    group.rollouts = generate_group(generator, enc, options, cfg.eglr.group_size, child_seed(run_seed, it));
    std::vector<std::vector<int>> lists;
    for (const auto& r : group.rollouts) lists.push_back(r.list);
    group.rewards = score_lists(evaluator, world, pool.user_id, lists, cfg.eglr.reward_mode);
    group.advantages = group_advantages(group.rewards);

    trainable.zero_grad();
    const Tensor loss = grpo_loss(group);
    backward(loss);
    adam_step(trainable, state);

    TrainLogRow row;
    row.iteration = it;
    const auto g = static_cast<double>(group.rewards.size());
    row.mean_reward = std::accumulate(group.rewards.begin(), group.rewards.end(), 0.0) / g;
    double var = 0.0;
    for (double r : group.rewards) var += (r - row.mean_reward) * (r - row.mean_reward);
    row.std_reward = std::sqrt(var / g);
    double h = 0.0;
    std::size_t steps = 0, reasons = 0;
    for (const auto& r : group.rollouts) {
      for (const auto& s : r.trace.steps) h += s.entropy_before;
      steps += r.trace.steps.size();
      reasons += r.trace.reason_steps();
    }
    row.mean_entropy = steps ? h / static_cast<double>(steps) : 0.0;
    row.reason_steps_per_list = static_cast<double>(reasons) / g;
    row.loss = loss.item();
    log.push_back(row);
    if (on_iteration) on_iteration(row);
  }
  trainable.zero_grad();
  return log;
}

double window_mean_reward(std::span<const TrainLogRow> log, std::size_t begin, std::size_t end) {
  end = std::min(end, log.size());
  if (begin >= end) throw std::invalid_argument("window_mean_reward: empty window");
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += log[i].mean_reward;
  return s / static_cast<double>(end - begin);
}

}  // namespace eglr
