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
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "eglr/evaluator.hpp"
#include "eglr/generator.hpp"

namespace eglr {

/// Binary-gain NDCG of the first k labels; 0 when there are no positives.
double ndcg_at_k(std::span<const int> ranked_labels, std::size_t k);
/// Average precision at k normalised by min(k, total positives).
double map_at_k(std::span<const int> ranked_labels, std::size_t k);

/// DCG of the evaluator's click predictions for `list`.
double evaluator_score(const EvaluatorModel& evaluator, const World& world, int user_id,
                       std::span<const int> list);

/// sum_{k=1..K} 1 / log2(k + 1).
double dcg_upper_bound(std::size_t k_len);

struct MetricReport {
  std::string label;
  std::map<std::string, double> values;
  std::size_t lists = 0;
};

void write_metric_csv(std::ostream& out, std::span<const MetricReport> reports);

struct PassAtK {
  std::vector<int> best_list;
  double best_score = 0.0;
  std::vector<double> scores;
};

/// `kpass` sampled rollouts, rollout r seeded with child_seed(seed, r); the
/// best list by evaluator score wins (earliest on ties).
PassAtK pass_at_k(const GeneratorModel& generator, const EvaluatorModel& evaluator,
                  const World& world, const PoolEncoding& pool, std::size_t kpass, std::uint64_t seed);

struct EntropyProfile {
  std::vector<double> before;        // mean entropy at the first decode of a position
  std::vector<double> after;         // mean entropy right before the selection
  std::vector<double> trigger_rate;  // share of positions with >= 1 reasoning step
  std::vector<std::size_t> triggered;
  std::vector<std::size_t> samples;
};

/// Positions with reasoning contribute to before/after; a position where no
/// trace reasoned reports its mean selection entropy in both columns.
EntropyProfile entropy_profile(std::span<const GenerationTrace> traces);
void write_entropy_csv(std::ostream& out, const EntropyProfile& profile);

struct EfficiencyRow {
  std::string label;
  std::size_t lists = 0;
  double reasoning_steps_per_list = 0.0;
  double mean_latency_seconds = 0.0;
};

EfficiencyRow efficiency_report(std::string label, std::span<const GenerationTrace> traces,
                                std::span<const double> wall_times);
void write_efficiency_csv(std::ostream& out, std::span<const EfficiencyRow> rows);

/// Shortest round-trip decimal form, used by every CSV writer.
std::string format_number(double x);

}  // namespace eglr
