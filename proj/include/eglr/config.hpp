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

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace eglr {

struct WorldConfig {
  std::size_t users = 200;
  std::size_t items = 2000;
  // Field 0 of every profile is the entity's own id; the rest are drawn
  // uniformly from the vocabularies below.
  std::size_t user_fields = 2;
  std::size_t item_fields = 2;
  std::size_t user_field_vocab = 8;
  std::size_t item_field_vocab = 16;  // item field 1 is the category
  std::size_t latent_dim = 4;
  double coef_a = 1.0;    // preference weight
  double coef_b = 0.5;    // position bias weight
  double coef_c = 0.8;    // redundancy penalty
  double coef_d0 = -1.0;  // intercept

  bool operator==(const WorldConfig&) const = default;
};

struct TaskConfig {
  std::size_t list_len = 10;   // K
  std::size_t pool_size = 20;  // M
  std::size_t lists = 10000;   // logged interaction records
  std::size_t pools = 1000;    // candidate pools for generator training
  double test_fraction = 0.2;
};

struct ModelConfig {
  std::size_t embed_dim = 16;  // per categorical field
  std::size_t hidden = 64;     // model width d; must equal embed_dim * total fields
  std::size_t heads = 8;
  std::size_t eval_layers = 2;
};

enum class RewardMode { kDcg, kListwise };

struct EglrConfig {
  double tau0 = 0.6;
  double alpha = 2.0;
  double entropy_threshold = 0.5;
  std::size_t max_reason_steps = 1;  // S_max
  std::size_t group_size = 4;        // G
  RewardMode reward_mode = RewardMode::kDcg;
  bool kv_cache = true;
};

struct OptimConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch = 128;
  std::size_t eval_epochs = 20;
  std::size_t gen_iterations = 2000;
};

struct ExperimentConfig {
  WorldConfig world;
  TaskConfig task;
  ModelConfig model;
  EglrConfig eglr;
  OptimConfig optim;
  std::uint64_t seed = 42;

  std::size_t model_width() const {
    return model.embed_dim * (world.user_fields + world.item_fields);
  }

  // Throws ConfigError naming the first violated invariant.
  void validate() const;

  std::string to_ini() const;
  static ExperimentConfig from_ini(std::string_view text);
  static ExperimentConfig load(const std::string& path);
  void save(const std::string& path) const;

  // "section.key" access used by sweeps and overrides.
  void set(std::string_view dotted_key, std::string_view value);
  std::string get(std::string_view dotted_key) const;
  static std::vector<std::string> keys();

  // Applies EGLR_SEED from the environment when set.
  void apply_env_overrides();

  bool operator==(const ExperimentConfig& other) const { return to_ini() == other.to_ini(); }
};

std::string to_string(RewardMode mode);
RewardMode parse_reward_mode(std::string_view text);

}  // namespace eglr
