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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "eglr/metrics.hpp"
#include "eglr/training.hpp"
#include "toy.hpp"

using namespace eglr;
using eglr::testing::toy_config;

namespace {

double dcg_prefix(const std::vector<int>& labels, std::size_t k) {
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += labels[i] / std::log2(static_cast<double>(i) + 2.0);
  return s;
}

// Ideal DCG by trying every ordering.
double brute_ndcg(std::vector<int> labels, std::size_t k) {
  const double dcg = dcg_prefix(labels, k);
  std::sort(labels.begin(), labels.end());
  double ideal = 0.0;
  do {
    ideal = std::max(ideal, dcg_prefix(labels, k));
  } while (std::next_permutation(labels.begin(), labels.end()));
  return ideal == 0.0 ? 0.0 : dcg / ideal;
}

// Mean of precision@i over the relevant ranks i <= k.
double brute_map(const std::vector<int>& labels, std::size_t k) {
  const auto total = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (total == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 1; i <= k; ++i) {
    if (labels[i - 1] == 0) continue;
    const auto hits = std::count(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(i), 1);
    s += static_cast<double>(hits) / static_cast<double>(i);
  }
  return s / static_cast<double>(std::min(k, total));
}

StepRecord reason(std::size_t pos, double h) {
  StepRecord s;
  s.kind = StepKind::kReason;
  s.position = pos;
  s.entropy_before = h;
  return s;
}

StepRecord select(std::size_t pos, double h, int item) {
  StepRecord s;
  s.kind = StepKind::kSelect;
  s.position = pos;
  s.entropy_before = h;
  s.chosen_item = item;
  s.logprob = -0.1;
  return s;
}

}  // namespace

TEST_CASE("ndcg and map examples") {
  const std::vector<int> a = {0, 1};
  CHECK(ndcg_at_k(a, 2) == doctest::Approx(0.630930).epsilon(1e-6));
  const std::vector<int> b = {0, 1, 1};
  CHECK(map_at_k(b, 3) == doctest::Approx(0.583333).epsilon(1e-6));
  const std::vector<int> none = {0, 0, 0};
  CHECK(ndcg_at_k(none, 2) == 0.0);
  CHECK(map_at_k(none, 2) == 0.0);
  const std::vector<int> perfect = {1, 1, 0, 0};
  CHECK(ndcg_at_k(perfect, 4) == 1.0);
  CHECK(map_at_k(perfect, 4) == 1.0);
  CHECK_THROWS_AS(ndcg_at_k(a, 0), std::invalid_argument);
  CHECK_THROWS_AS(map_at_k(a, 3), std::invalid_argument);
}

TEST_CASE("ndcg and map agree with brute force on all short binary lists") {
  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      std::vector<int> labels(n);
      for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>((mask >> i) & 1U);
      for (std::size_t k = 1; k <= n; ++k) {
        CAPTURE(mask);
        CAPTURE(k);
        const double nd = ndcg_at_k(labels, k);
        const double ap = map_at_k(labels, k);
        CHECK(nd == doctest::Approx(brute_ndcg(labels, k)).epsilon(1e-12));
        CHECK(ap == doctest::Approx(brute_map(labels, k)).epsilon(1e-12));
        CHECK(nd >= 0.0);
        CHECK(nd <= 1.0 + 1e-12);
        CHECK(ap >= 0.0);
        CHECK(ap <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("evaluator_score") {
  const auto cfg = toy_config();
  const auto world = generate_world(cfg.world, 2);
  const auto eval = EvaluatorModel::init(cfg, 3);
  CHECK(dcg_upper_bound(10) == doctest::Approx(4.543559).epsilon(1e-6));
  CHECK(dcg_upper_bound(1) == 1.0);
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto list = eglr::testing::random_ids(rng, cfg.world.items, 3);
    const double s = evaluator_score(eval, world, 1, list);
    NoGradGuard guard;
    const auto out = evaluator_forward(eval, world, 1, list);
    double expect = 0.0;
    for (std::size_t k = 0; k < 3; ++k) expect += (std::exp2(out.y_point[k]) - 1.0) / std::log2(k + 2.0);
    CHECK(s == doctest::Approx(expect).epsilon(1e-14));
    CHECK(s > 0.0);
    CHECK(s < dcg_upper_bound(3));
  }
}

TEST_CASE("pass_at_k") {
  const auto cfg = toy_config();
  const auto world = generate_world(cfg.world, 2);
  const auto eval = EvaluatorModel::init(cfg, 3);
  const auto gen = GeneratorModel::init(eval, 4);
  const std::vector<int> cand = {1, 4, 6, 10, 15, 22};
  const auto pool = encode_pool(gen, world, 0, cand);

  double prev = -1.0;
  std::vector<double> prev_scores;
  for (std::size_t k : {1, 2, 4, 8}) {
    const auto r = pass_at_k(gen, eval, world, pool, k, 17);
    REQUIRE(r.scores.size() == k);
    CHECK(std::equal(prev_scores.begin(), prev_scores.end(), r.scores.begin()));
    CHECK(r.best_score >= prev);
    CHECK(r.best_score == *std::max_element(r.scores.begin(), r.scores.end()));
    CHECK(r.best_score == doctest::Approx(evaluator_score(eval, world, 0, r.best_list)).epsilon(1e-12));
    prev = r.best_score;
    prev_scores = r.scores;
  }
  CHECK_THROWS_AS(pass_at_k(gen, eval, world, pool, 0, 17), std::invalid_argument);
}

TEST_CASE("entropy_profile") {
  GenerationTrace a, b;
  a.steps = {reason(0, 1.0), select(0, 0.4, 5), select(1, 0.2, 7)};
  b.steps = {select(0, 0.6, 5), reason(1, 0.9), reason(1, 0.7), select(1, 0.3, 8)};

  const std::vector<GenerationTrace> ab = {a, b};
  const auto p = entropy_profile(ab);
  REQUIRE(p.before.size() == 2);
  CHECK(p.samples == std::vector<std::size_t>{2, 2});
  CHECK(p.triggered == std::vector<std::size_t>{1, 1});
  CHECK(p.trigger_rate == std::vector<double>{0.5, 0.5});
  CHECK(p.before[0] == 1.0);
  CHECK(p.after[0] == 0.4);
  CHECK(p.before[1] == 0.9);
  CHECK(p.after[1] == 0.3);

  SUBCASE("order of traces does not matter") {
    const std::vector<GenerationTrace> ba = {b, a};
    const auto q = entropy_profile(ba);
    CHECK(q.before == p.before);
    CHECK(q.after == p.after);
    CHECK(q.trigger_rate == p.trigger_rate);
  }
  SUBCASE("positions without reasoning report the selection entropy") {
    GenerationTrace c;
    c.steps = {select(0, 0.5, 1), select(1, 0.25, 2)};
    GenerationTrace d;
    d.steps = {select(0, 0.7, 1), select(1, 0.35, 2)};
    const std::vector<GenerationTrace> cd = {c, d};
    const auto q = entropy_profile(cd);
    CHECK(q.before[0] == doctest::Approx(0.6));
    CHECK(q.after[0] == doctest::Approx(0.6));
    CHECK(q.before[1] == doctest::Approx(0.3));
    CHECK(q.trigger_rate[1] == 0.0);
  }
  SUBCASE("csv") {
    std::ostringstream out;
    write_entropy_csv(out, p);
    CHECK(out.str() ==
          "position,entropy_before,entropy_after,delta,trigger_rate,triggered,samples\n"
          "1,1,0.4,-0.6,0.5,1,2\n"
          "2,0.9,0.3,-0.6000000000000001,0.5,1,2\n");
  }
  CHECK_THROWS_AS(entropy_profile(std::span<const GenerationTrace>{}), std::invalid_argument);
}

TEST_CASE("efficiency_report") {
  auto cfg = toy_config();
  const auto world = generate_world(cfg.world, 2);
  const auto gen = GeneratorModel::init(cfg, 4);
  const std::vector<int> cand = {1, 4, 6, 10, 15, 22};
  const auto pool = encode_pool(gen, world, 0, cand);

  for (std::size_t smax : {0, 1, 2, 3}) {
    auto opt = GenerateOptions::from(cfg, DecodeMode::kSample);
    opt.eglr.max_reason_steps = smax;
    opt.eglr.entropy_threshold = 0.0;
    const auto group = generate_group(gen, pool, opt, 10, 5);
    std::vector<GenerationTrace> traces;
    for (const auto& r : group) traces.push_back(r.trace);
    const std::vector<double> times(10, 0.002);
    const auto row = efficiency_report("s" + std::to_string(smax), traces, times);
    CHECK(row.lists == 10);
    CHECK(row.reasoning_steps_per_list <= static_cast<double>(3 * smax));
    // With a zero threshold every undecided position spends the full budget.
    CHECK(row.reasoning_steps_per_list == static_cast<double>(3 * smax));
    CHECK(row.mean_latency_seconds == doctest::Approx(0.002));
  }

  const std::vector<GenerationTrace> one(1);
  const std::vector<double> two = {1.0, 2.0};
  CHECK_THROWS_AS(efficiency_report("x", one, two), std::invalid_argument);

  std::ostringstream out;
  const std::vector<EfficiencyRow> rows = {{"s0", 4, 0.0, 0.5}, {"s1", 4, 2.25, 0.75}};
  write_efficiency_csv(out, rows);
  CHECK(out.str() ==
        "config,lists,reasoning_steps_per_list,mean_latency_seconds\n"
        "s0,4,0,0.5\n"
        "s1,4,2.25,0.75\n");
}

TEST_CASE("metric csv") {
  std::vector<MetricReport> reports(2);
  reports[0] = {"eglr", {{"ndcg@5", 0.5}, {"map@5", 0.25}}, 10};
  reports[1] = {"logged", {{"ndcg@5", 0.125}}, 10};
  std::ostringstream out;
  write_metric_csv(out, reports);
  CHECK(out.str() ==
        "model,lists,map@5,ndcg@5\n"
        "eglr,10,0.25,0.5\n"
        "logged,10,,0.125\n");
}

TEST_CASE("format_number round-trips") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(-1e-20) == "-1e-20");
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.normal() * std::pow(10.0, rng.uniform(-10, 10));
    CHECK(std::stod(format_number(x)) == x);
  }
}
