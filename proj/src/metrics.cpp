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

#include "eglr/metrics.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <stdexcept>

#include "eglr/training.hpp"

namespace eglr {

namespace {

void check_k(std::span<const int> labels, std::size_t k) {
  if (k < 1 || k > labels.size()) {
    throw std::invalid_argument("k = " + std::to_string(k) + " outside [1, " + std::to_string(labels.size()) + "]");
  }
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

double ndcg_at_k(std::span<const int> ranked_labels, std::size_t k) {
  check_k(ranked_labels, k);
  double dcg = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < ranked_labels.size(); ++i) {
    if (ranked_labels[i] == 0) continue;
    ++positives;
    if (i < k) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  if (positives == 0) return 0.0;
  double ideal = 0.0;
  for (std::size_t i = 0; i < std::min(k, positives); ++i) ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return dcg / ideal;
}

double map_at_k(std::span<const int> ranked_labels, std::size_t k) {
  check_k(ranked_labels, k);
  std::size_t positives = 0;
  for (int y : ranked_labels) positives += y != 0;
  if (positives == 0) return 0.0;
  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (ranked_labels[i] == 0) continue;
    ++hits;
    ap += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return ap / static_cast<double>(std::min(k, positives));
}

double evaluator_score(const EvaluatorModel& evaluator, const World& world, int user_id,
                       std::span<const int> list) {
  NoGradGuard frozen;
  const auto out = evaluator_forward(evaluator, world, user_id, list);
  return reward_dcg(out.y_point.data());
}

double dcg_upper_bound(std::size_t k_len) {
  double s = 0.0;
  for (std::size_t k = 1; k <= k_len; ++k) s += 1.0 / std::log2(static_cast<double>(k) + 1.0);
  return s;
}

void write_metric_csv(std::ostream& out, std::span<const MetricReport> reports) {
  std::set<std::string> keys;
  for (const auto& r : reports) {
    for (const auto& [k, v] : r.values) keys.insert(k);
  }
  out << "model,lists";
  for (const auto& k : keys) out << ',' << k;
  out << '\n';
  for (const auto& r : reports) {
    out << r.label << ',' << r.lists;
    for (const auto& k : keys) {
      out << ',';
      if (auto it = r.values.find(k); it != r.values.end()) out << format_number(it->second);
    }
    out << '\n';
  }
}

PassAtK pass_at_k(const GeneratorModel& generator, const EvaluatorModel& evaluator,
                  const World& world, const PoolEncoding& pool, std::size_t kpass, std::uint64_t seed) {
  if (kpass == 0) throw std::invalid_argument("pass_at_k: K must be >= 1");
  NoGradGuard frozen;
  const auto options = GenerateOptions::from(generator.config, DecodeMode::kSample);
  const auto rollouts = generate_group(generator, pool, options, kpass, seed);
  std::vector<std::vector<int>> lists;
  for (const auto& r : rollouts) lists.push_back(r.list);
  PassAtK out;
  out.scores = score_lists(evaluator, world, pool.user_id, lists, RewardMode::kDcg);
  std::size_t best = 0;
  for (std::size_t r = 1; r < out.scores.size(); ++r) {
    if (out.scores[r] > out.scores[best]) best = r;
  }
  out.best_list = lists[best];
  out.best_score = out.scores[best];
  return out;
}

EntropyProfile entropy_profile(std::span<const GenerationTrace> traces) {
  if (traces.empty()) throw std::invalid_argument("entropy_profile: no traces");
  std::size_t k_len = 0;
  for (const auto& t : traces) {
    for (const auto& s : t.steps) k_len = std::max(k_len, s.position + 1);
  }
  EntropyProfile p;
  p.before.assign(k_len, 0.0);
  p.after.assign(k_len, 0.0);
  p.trigger_rate.assign(k_len, 0.0);
  p.triggered.assign(k_len, 0);
  p.samples.assign(k_len, 0);
  std::vector<double> select_sum(k_len, 0.0);
  for (const auto& t : traces) {
    // Walk runs of steps that share a position.
    std::size_t i = 0;
    while (i < t.steps.size()) {
      const std::size_t pos = t.steps[i].position;
      const double first = t.steps[i].entropy_before;
      bool reasoned = false;
      while (i < t.steps.size() && t.steps[i].kind == StepKind::kReason) {
        reasoned = true;
        ++i;
      }
      if (i == t.steps.size()) break;  // truncated trace without a selection
      const double last = t.steps[i].entropy_before;
      ++i;
      ++p.samples[pos];
      select_sum[pos] += last;
      if (reasoned) {
        ++p.triggered[pos];
        p.before[pos] += first;
        p.after[pos] += last;
      }
    }
  }
  for (std::size_t k = 0; k < k_len; ++k) {
    if (p.samples[k] == 0) continue;
    p.trigger_rate[k] = static_cast<double>(p.triggered[k]) / static_cast<double>(p.samples[k]);
    if (p.triggered[k] > 0) {
      p.before[k] /= static_cast<double>(p.triggered[k]);
      p.after[k] /= static_cast<double>(p.triggered[k]);
    } else {
      p.before[k] = p.after[k] = select_sum[k] / static_cast<double>(p.samples[k]);
    }
  }
  return p;
}

void write_entropy_csv(std::ostream& out, const EntropyProfile& p) {
  out << "position,entropy_before,entropy_after,delta,trigger_rate,triggered,samples\n";
  for (std::size_t k = 0; k < p.before.size(); ++k) {
    out << k + 1 << ',' << format_number(p.before[k]) << ',' << format_number(p.after[k]) << ','
        << format_number(p.after[k] - p.before[k]) << ',' << format_number(p.trigger_rate[k]) << ','
        << p.triggered[k] << ',' << p.samples[k] << '\n';
  }
}

EfficiencyRow efficiency_report(std::string label, std::span<const GenerationTrace> traces,
                                std::span<const double> wall_times) {
  if (traces.size() != wall_times.size()) {
    throw std::invalid_argument("efficiency_report: one wall time per trace required");
  }
  EfficiencyRow row;
  row.label = std::move(label);
  row.lists = traces.size();
  if (traces.empty()) return row;
  std::size_t reasons = 0;
  double t = 0.0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    reasons += traces[i].reason_steps();
    t += wall_times[i];
  }
  row.reasoning_steps_per_list = static_cast<double>(reasons) / static_cast<double>(traces.size());
  row.mean_latency_seconds = t / static_cast<double>(traces.size());
  return row;
}

void write_efficiency_csv(std::ostream& out, std::span<const EfficiencyRow> rows) {
  out << "config,lists,reasoning_steps_per_list,mean_latency_seconds\n";
  for (const auto& r : rows) {
    out << r.label << ',' << r.lists << ',' << format_number(r.reasoning_steps_per_list) << ','
        << format_number(r.mean_latency_seconds) << '\n';
  }
}

}  // namespace eglr
