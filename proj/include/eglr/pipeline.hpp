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
 * @file pipeline.hpp
 * @brief End-to-end stages shared by the command-line tool, the acceptance
 * suite and the Python bindings.
 *
 * Every stage draws its randomness from child_seed(config.seed, stage), so
 * running a stage alone or as part of the full pipeline gives the same result.
 */

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "eglr/config.hpp"
#include "eglr/evaluator.hpp"
#include "eglr/generator.hpp"
#include "eglr/metrics.hpp"
#include "eglr/sim.hpp"
#include "eglr/training.hpp"

namespace eglr {

enum class SeedStage : std::uint64_t {
  kWorld = 1,
  kInteractions = 2,
  kTrainPools = 3,
  kEvaluatorInit = 4,
  kGeneratorInit = 5,
  kDecode = 6,
};

std::uint64_t stage_seed(const ExperimentConfig& config, SeedStage stage);

/// Everything gen-data writes. test_pools[i] is the pool test[i] was cut from.
struct DataBundle {
  World world;
  std::vector<InteractionRecord> train;
  std::vector<InteractionRecord> test;
  std::vector<CandidatePoolRecord> pools;
  std::vector<CandidatePoolRecord> test_pools;
};

DataBundle generate_data(const ExperimentConfig& config);

// File names inside a data directory.
inline constexpr const char* kWorldFile = "world.jsonl";
inline constexpr const char* kTrainFile = "train.jsonl";
inline constexpr const char* kTestFile = "test.jsonl";
inline constexpr const char* kPoolsFile = "pools.jsonl";
inline constexpr const char* kTestPoolsFile = "test_pools.jsonl";

void write_data(const std::string& dir, const DataBundle& data);
DataBundle read_data(const std::string& dir);

EvaluatorModel train_evaluator_model(const ExperimentConfig& config, const World& world,
                                     std::span<const InteractionRecord> train,
                                     const std::function<void(std::size_t, const EpochLoss&, const EvaluatorModel&)>& on_epoch = {});

struct GeneratorRun {
  GeneratorModel model;
  std::vector<TrainLogRow> log;
};

/// Fresh decoder on top of the evaluator's shared features, trained with the
/// eglr / optim settings of `config` for config.optim.gen_iterations steps.
GeneratorRun train_generator_model(const ExperimentConfig& config, const EvaluatorModel& evaluator,
                                   const World& world, std::span<const CandidatePoolRecord> pools,
                                   const std::function<void(const TrainLogRow&)>& on_iteration = {});

/// Re-ranks every logged list with the GREEDY generator (the list's own items
/// form the pool; labels travel with items) and reports MAP@k, NDCG@k and the
/// evaluator score for the re-ranked ("eglr") and logged ("logged") orders.
/// k runs over {5, 10}, capped at the list length.
std::vector<MetricReport> evaluate_reranking(const GeneratorModel& generator, const EvaluatorModel& evaluator,
                                             const World& world, std::span<const InteractionRecord> records);

/// Throws ConfigError when `a` and `b` disagree on any key under the given
/// section prefixes (e.g. "world.", "model.").
void require_same_sections(const ExperimentConfig& a, const ExperimentConfig& b,
                           std::span<const std::string> prefixes, const std::string& what);

}  // namespace eglr
