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
 * @file sim.hpp
 * @brief Synthetic recommendation world with list-dependent click feedback.
 *
 * Users and items carry categorical features (what models see) and a hidden
 * latent vector (what the click model sees). Feedback depends on the
 * user-item affinity, on the slot, and on how redundant an item is with the
 * items shown above it, so the order of a list changes its value.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eglr/config.hpp"

namespace eglr {

struct UserProfile {
  int user_id = 0;
  std::vector<int> feature_ids;  // [0] is user_id
  std::vector<double> latent;    // simulator-only

  bool operator==(const UserProfile&) const = default;
};

struct Item {
  int item_id = 0;
  std::vector<int> feature_ids;  // [0] is item_id, [1] (if present) the category
  std::vector<double> latent;    // simulator-only

  bool operator==(const Item&) const = default;
};

struct World {
  WorldConfig config;
  std::vector<UserProfile> users;
  std::vector<Item> items;

  // Throw VocabularyError for unknown ids.
  const UserProfile& user(int id) const;
  const Item& item(int id) const;
  int category(int item_id) const;

  // Table sizes per field, id field first.
  std::vector<std::size_t> user_vocab_sizes() const;
  std::vector<std::size_t> item_vocab_sizes() const;

  bool operator==(const World&) const = default;
};

struct InteractionRecord {
  int user_id = 0;
  std::vector<int> items;
  std::vector<int> y_point;
  double y_list = 0.0;

  // Throws std::invalid_argument describing the first broken invariant.
  void validate() const;
  bool operator==(const InteractionRecord&) const = default;
};

struct CandidatePoolRecord {
  int user_id = 0;
  std::vector<int> candidates;

  void validate(std::size_t min_size = 1) const;
  bool operator==(const CandidatePoolRecord&) const = default;
};

struct Dataset {
  std::vector<InteractionRecord> interactions;
  std::vector<CandidatePoolRecord> pools;
};

World generate_world(const WorldConfig& config, std::uint64_t seed);

/// Click probability of every slot of `list` for `user`:
/// sigmoid(a<u,i_k> + b/log2(k+1) - c max_{j<k} cos(i_k, i_j) + d0).
std::vector<double> click_probabilities(const World& world, int user_id,
                                        std::span<const int> list);

struct Feedback {
  std::vector<int> y_point;
  double y_list = 0.0;  // clicks + 0.5 * distinct categories
};

Feedback simulate_feedback(const World& world, int user_id, std::span<const int> list,
                           std::uint64_t seed);

/// Logged lists are the top-K of each pool by latent affinity, then clicked
/// through simulate_feedback. Pools are drawn without replacement.
Dataset build_dataset(const World& world, std::size_t n_lists, std::size_t list_len,
                      std::size_t pool_size, std::uint64_t seed);

/// Candidate pools only (no feedback), for generator training.
std::vector<CandidatePoolRecord> build_pools(const World& world, std::size_t n_pools,
                                             std::size_t pool_size, std::uint64_t seed);

/// Deterministic head/tail split: the last round(n * fraction) records test.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_train_test(const std::vector<T>& records,
                                                           double test_fraction) {
  const auto n_test = static_cast<std::size_t>(static_cast<double>(records.size()) * test_fraction + 0.5);
  const auto cut = records.size() - std::min(n_test, records.size());
  return {std::vector<T>(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(cut)),
          std::vector<T>(records.begin() + static_cast<std::ptrdiff_t>(cut), records.end())};
}

// ---- JSONL -----------------------------------------------------------------

void write_interactions(const std::string& path, std::span<const InteractionRecord> records);
std::vector<InteractionRecord> read_interactions(const std::string& path);
void write_pools(const std::string& path, std::span<const CandidatePoolRecord> records);
std::vector<CandidatePoolRecord> read_pools(const std::string& path);

// One header line with the world config, then one line per user and item.
void write_world(const std::string& path, const World& world);
World read_world(const std::string& path);

}  // namespace eglr
