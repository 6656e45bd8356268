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

#include "eglr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "eglr/errors.hpp"
#include "eglr/rng.hpp"

namespace eglr {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

void require_distinct(std::span<const int> ids, const char* what) {
  std::set<int> seen(ids.begin(), ids.end());
  if (seen.size() != ids.size()) throw std::invalid_argument(std::string(what) + " contains duplicate items");
}

std::vector<double> draw_latent(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

const UserProfile& World::user(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= users.size()) {
    throw VocabularyError("unknown user id " + std::to_string(id));
  }
  return users[static_cast<std::size_t>(id)];
}

const Item& World::item(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= items.size()) {
    throw VocabularyError("unknown item id " + std::to_string(id));
  }
  return items[static_cast<std::size_t>(id)];
}

int World::category(int item_id) const {
  const auto& f = item(item_id).feature_ids;
  return f.size() > 1 ? f[1] : f[0];
}

std::vector<std::size_t> World::user_vocab_sizes() const {
  std::vector<std::size_t> v(config.user_fields, config.user_field_vocab);
  v[0] = users.size();
  return v;
}

std::vector<std::size_t> World::item_vocab_sizes() const {
  std::vector<std::size_t> v(config.item_fields, config.item_field_vocab);
  v[0] = items.size();
  return v;
}

void InteractionRecord::validate() const {
  if (items.empty()) throw std::invalid_argument("interaction has no items");
  if (items.size() != y_point.size()) {
    throw std::invalid_argument("|items| = " + std::to_string(items.size()) +
                                " but |y_point| = " + std::to_string(y_point.size()));
  }
  require_distinct(items, "interaction");
  for (int y : y_point) {
    if (y != 0 && y != 1) throw std::invalid_argument("y_point labels must be 0 or 1");
  }
  if (!(y_list >= 0.0) || !std::isfinite(y_list)) throw std::invalid_argument("y_list must be >= 0");
}

void CandidatePoolRecord::validate(std::size_t min_size) const {
  if (candidates.size() < min_size) {
    throw std::invalid_argument("pool has " + std::to_string(candidates.size()) +
                                " candidates, need at least " + std::to_string(min_size));
  }
  require_distinct(candidates, "candidate pool");
}

World generate_world(const WorldConfig& config, std::uint64_t seed) {
  if (config.users == 0 || config.items == 0) throw std::invalid_argument("world needs users and items");
  if (config.user_fields == 0 || config.item_fields == 0) throw std::invalid_argument("world needs feature fields");
  if (config.user_field_vocab == 0 || config.item_field_vocab == 0 || config.latent_dim == 0) {
    throw std::invalid_argument("vocabulary sizes and latent_dim must be positive");
  }
  Rng rng(seed);
  World w;
  w.config = config;
  w.users.resize(config.users);
  for (std::size_t u = 0; u < config.users; ++u) {
    auto& p = w.users[u];
    p.user_id = static_cast<int>(u);
    p.feature_ids.push_back(p.user_id);
    for (std::size_t f = 1; f < config.user_fields; ++f) {
      p.feature_ids.push_back(static_cast<int>(rng.uniform_int(config.user_field_vocab)));
    }
    p.latent = draw_latent(rng, config.latent_dim);
  }
  w.items.resize(config.items);
  for (std::size_t i = 0; i < config.items; ++i) {
    auto& it = w.items[i];
    it.item_id = static_cast<int>(i);
    it.feature_ids.push_back(it.item_id);
    for (std::size_t f = 1; f < config.item_fields; ++f) {
      it.feature_ids.push_back(static_cast<int>(rng.uniform_int(config.item_field_vocab)));
    }
    it.latent = draw_latent(rng, config.latent_dim);
  }
  return w;
}

std::vector<double> click_probabilities(const World& world, int user_id,
                                        std::span<const int> list) {
  require_distinct(list, "list");
  const auto& c = world.config;
  const auto& u = world.user(user_id);
  std::vector<double> p(list.size());
  for (std::size_t k = 0; k < list.size(); ++k) {
    const auto& item = world.item(list[k]);
    double redundancy = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double s = cosine(item.latent, world.item(list[j]).latent);
      redundancy = j == 0 ? s : std::max(redundancy, s);
    }
    const double pos_bias = 1.0 / std::log2(static_cast<double>(k) + 2.0);
    p[k] = logistic(c.coef_a * dot(u.latent, item.latent) + c.coef_b * pos_bias -
                    c.coef_c * redundancy + c.coef_d0);
  }
  return p;
}

Feedback simulate_feedback(const World& world, int user_id, std::span<const int> list,
                           std::uint64_t seed) {
  const auto probs = click_probabilities(world, user_id, list);
  Rng rng(seed);
  Feedback fb;
  fb.y_point.resize(list.size());
  std::set<int> categories;
  for (std::size_t k = 0; k < list.size(); ++k) {
    fb.y_point[k] = rng.bernoulli(probs[k]) ? 1 : 0;
    categories.insert(world.category(list[k]));
  }
  const int clicks = std::accumulate(fb.y_point.begin(), fb.y_point.end(), 0);
  fb.y_list = static_cast<double>(clicks) + 0.5 * static_cast<double>(categories.size());
  return fb;
}

std::vector<CandidatePoolRecord> build_pools(const World& world, std::size_t n_pools,
                                             std::size_t pool_size, std::uint64_t seed) {
  if (pool_size > world.items.size()) {
    throw std::invalid_argument("pool size " + std::to_string(pool_size) + " exceeds item count " +
                                std::to_string(world.items.size()));
  }
  if (pool_size == 0) throw std::invalid_argument("pool size must be positive");
  Rng rng(seed);
  std::vector<CandidatePoolRecord> pools(n_pools);
  for (auto& p : pools) {
    p.user_id = static_cast<int>(rng.uniform_int(world.users.size()));
    for (auto idx : rng.sample_without_replacement(world.items.size(), pool_size)) {
      p.candidates.push_back(static_cast<int>(idx));
    }
  }
  return pools;
}

Dataset build_dataset(const World& world, std::size_t n_lists, std::size_t list_len,
                      std::size_t pool_size, std::uint64_t seed) {
  if (list_len == 0 || list_len > pool_size) {
    throw std::invalid_argument("need 1 <= K <= M");
  }
  Dataset ds;
  ds.pools = build_pools(world, n_lists, pool_size, seed);
  ds.interactions.reserve(n_lists);
  for (std::size_t n = 0; n < n_lists; ++n) {
    const auto& pool = ds.pools[n];
    const auto& u = world.user(pool.user_id);
    std::vector<std::pair<double, int>> scored;
    for (int id : pool.candidates) {
      const auto& lat = world.item(id).latent;
      double s = 0.0;
      for (std::size_t d = 0; d < lat.size(); ++d) s += u.latent[d] * lat[d];
      scored.emplace_back(-s, id);
    }
    std::sort(scored.begin(), scored.end());
    InteractionRecord rec;
    rec.user_id = pool.user_id;
    for (std::size_t k = 0; k < list_len; ++k) rec.items.push_back(scored[k].second);
    auto fb = simulate_feedback(world, rec.user_id, rec.items, child_seed(seed, n));
    rec.y_point = std::move(fb.y_point);
    rec.y_list = fb.y_list;
    ds.interactions.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace eglr
