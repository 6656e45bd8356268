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

#include "eglr/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <stdexcept>

#include "eglr/errors.hpp"

namespace eglr {

namespace fs = std::filesystem;

std::uint64_t stage_seed(const ExperimentConfig& config, SeedStage stage) {
  return child_seed(config.seed, static_cast<std::uint64_t>(stage));
}

DataBundle generate_data(const ExperimentConfig& config) {
  config.validate();
  DataBundle out;
  out.world = generate_world(config.world, stage_seed(config, SeedStage::kWorld));
  auto ds = build_dataset(out.world, config.task.lists, config.task.list_len, config.task.pool_size,
                          stage_seed(config, SeedStage::kInteractions));
  std::tie(out.train, out.test) = split_train_test(ds.interactions, config.task.test_fraction);
  out.test_pools = split_train_test(ds.pools, config.task.test_fraction).second;
  out.pools = build_pools(out.world, config.task.pools, config.task.pool_size,
                          stage_seed(config, SeedStage::kTrainPools));
  return out;
}

void write_data(const std::string& dir, const DataBundle& data) {
  fs::create_directories(dir);
  const fs::path d(dir);
  write_world((d / kWorldFile).string(), data.world);
  write_interactions((d / kTrainFile).string(), data.train);
  write_interactions((d / kTestFile).string(), data.test);
  write_pools((d / kPoolsFile).string(), data.pools);
  write_pools((d / kTestPoolsFile).string(), data.test_pools);
}

DataBundle read_data(const std::string& dir) {
  if (!fs::is_directory(dir)) throw FileNotFoundError(dir);
  const fs::path d(dir);
  DataBundle out;
  out.world = read_world((d / kWorldFile).string());
  out.train = read_interactions((d / kTrainFile).string());
  out.test = read_interactions((d / kTestFile).string());
  out.pools = read_pools((d / kPoolsFile).string());
  out.test_pools = read_pools((d / kTestPoolsFile).string());
  return out;
}

EvaluatorModel train_evaluator_model(const ExperimentConfig& config, const World& world,
                                     std::span<const InteractionRecord> train,
                                     const std::function<void(std::size_t, const EpochLoss&, const EvaluatorModel&)>& on_epoch) {
  auto model = EvaluatorModel::init(config, stage_seed(config, SeedStage::kEvaluatorInit));
  std::function<void(std::size_t, const EpochLoss&)> hook;
  if (on_epoch) hook = [&](std::size_t epoch, const EpochLoss& loss) { on_epoch(epoch, loss, model); };
  pretrain_evaluator(model, world, train, config.optim.eval_epochs, hook);
  return model;
}

GeneratorRun train_generator_model(const ExperimentConfig& config, const EvaluatorModel& evaluator,
                                   const World& world, std::span<const CandidatePoolRecord> pools,
                                   const std::function<void(const TrainLogRow&)>& on_iteration) {
  GeneratorRun run{GeneratorModel::init(evaluator, stage_seed(config, SeedStage::kGeneratorInit)), {}};
  run.model.config = config;
  run.log = train_generator(run.model, evaluator, world, pools, config.optim.gen_iterations, on_iteration);
  return run;
}

std::vector<MetricReport> evaluate_reranking(const GeneratorModel& generator, const EvaluatorModel& evaluator,
                                             const World& world, std::span<const InteractionRecord> records) {
  if (records.empty()) throw std::invalid_argument("evaluate: no records");
  const std::size_t k_len = records[0].items.size();
  std::vector<std::size_t> ks;
  for (std::size_t k : {std::size_t{5}, std::size_t{10}}) {
    const std::size_t kk = std::min(k, k_len);
    if (std::find(ks.begin(), ks.end(), kk) == ks.end()) ks.push_back(kk);
  }
  MetricReport eglr{"eglr", {}, records.size()};
  MetricReport logged{"logged", {}, records.size()};
  auto options = GenerateOptions::from(generator.config, DecodeMode::kGreedy);
  options.list_len = k_len;
  Rng unused(0);
  NoGradGuard frozen;
  for (const auto& rec : records) {
    if (rec.items.size() != k_len) throw std::invalid_argument("evaluate: records have different lengths");
    const auto pool = encode_pool(generator, world, rec.user_id, rec.items);
    const auto ranked = generate_list(generator, pool, options, unused).list;
    std::vector<int> labels(k_len);
    for (std::size_t i = 0; i < k_len; ++i) {
      const auto at = std::find(rec.items.begin(), rec.items.end(), ranked[i]) - rec.items.begin();
      labels[i] = rec.y_point[static_cast<std::size_t>(at)];
    }
    for (std::size_t k : ks) {
      const auto suffix = "@" + std::to_string(k);
      eglr.values["map" + suffix] += map_at_k(labels, k);
      eglr.values["ndcg" + suffix] += ndcg_at_k(labels, k);
      logged.values["map" + suffix] += map_at_k(rec.y_point, k);
      logged.values["ndcg" + suffix] += ndcg_at_k(rec.y_point, k);
    }
    eglr.values["evaluator_score"] += evaluator_score(evaluator, world, rec.user_id, ranked);
    logged.values["evaluator_score"] += evaluator_score(evaluator, world, rec.user_id, rec.items);
  }
  const auto n = static_cast<double>(records.size());
  for (auto* r : {&eglr, &logged}) {
    for (auto& [key, v] : r->values) v /= n;
  }
  return {eglr, logged};
}

void require_same_sections(const ExperimentConfig& a, const ExperimentConfig& b,
                           std::span<const std::string> prefixes, const std::string& what) {
  for (const auto& key : ExperimentConfig::keys()) {
    const bool covered = std::any_of(prefixes.begin(), prefixes.end(),
                                     [&](const std::string& p) { return key.rfind(p, 0) == 0; });
    if (covered && a.get(key) != b.get(key)) {
      throw ConfigError(what + ": " + key + " is " + a.get(key) + " here but " + b.get(key) + " there");
    }
  }
}

}  // namespace eglr
