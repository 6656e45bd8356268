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

// Small worlds and models shared by the test binaries.

#pragma once

#include <vector>

#include "eglr/config.hpp"
#include "eglr/rng.hpp"
#include "eglr/sim.hpp"

namespace eglr::testing {

/// d = 4 * (2 + 2) = 16, two heads, one encoder layer.
inline ExperimentConfig toy_config(std::size_t users = 6, std::size_t items = 24) {
  ExperimentConfig c;
  c.world.users = users;
  c.world.items = items;
  c.world.user_field_vocab = 3;
  c.world.item_field_vocab = 5;
  c.model.embed_dim = 4;
  c.model.hidden = 16;
  c.model.heads = 2;
  c.model.eval_layers = 1;
  c.task.list_len = 3;
  c.task.pool_size = 6;
  c.task.lists = 64;
  c.task.pools = 16;
  c.optim.batch = 16;
  c.seed = 7;
  return c;
}

/// Distinct ids drawn from [0, n).
inline std::vector<int> random_ids(Rng& rng, std::size_t n, std::size_t count) {
  std::vector<int> out;
  for (auto i : rng.sample_without_replacement(n, count)) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace eglr::testing
