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

#include "eglr/evaluator.hpp"

#include <cmath>
#include <stdexcept>

#include "eglr/checkpoint.hpp"
#include "eglr/errors.hpp"
#include "eglr/optim.hpp"

namespace eglr {

namespace {

std::string table_name(const char* side, std::size_t field) {
  return std::string("shared.emb.") + side + "." + std::to_string(field);
}

Tensor embedding_table(std::size_t vocab, std::size_t dim, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<double> v(vocab * dim);
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(v), {vocab, dim}, true);
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return add_row(matmul(x, w), b); }

Tensor eval_inputs(const EvaluatorModel& model, const World& world, std::span<const int> users,
                   std::span<const std::vector<int>> lists) {
  if (lists.empty() || lists.size() != users.size()) {
    throw DimensionError("evaluator: need one user per list and at least one list");
  }
  const std::size_t k_len = lists[0].size();
  if (k_len == 0) throw DimensionError("evaluator: empty list");
  std::vector<int> row_users, row_items;
  row_users.reserve(lists.size() * k_len);
  row_items.reserve(lists.size() * k_len);
  for (std::size_t b = 0; b < lists.size(); ++b) {
    if (lists[b].size() != k_len) throw DimensionError("evaluator: lists in a batch must share K");
    for (int id : lists[b]) {
      row_users.push_back(users[b]);
      row_items.push_back(id);
    }
  }
  const std::size_t d = model.config.model_width();
  const Tensor joint = joint_embeddings(model.params, world, row_users, row_items);
  const Tensor pe = sinusoidal_position_encoding(k_len, d);
  std::vector<double> tiled(lists.size() * k_len * d);
  for (std::size_t b = 0; b < lists.size(); ++b) {
    std::copy(pe.data().begin(), pe.data().end(),
              tiled.begin() + static_cast<std::ptrdiff_t>(b * k_len * d));
  }
  const Tensor x = joint + Tensor::from(std::move(tiled), {lists.size() * k_len, d});
  const Tensor parts[] = {reshape(model.params.get("eval.cls"), {1, d}), x};
  const Tensor stacked = concat_rows(parts);
  std::vector<std::size_t> order;
  order.reserve(lists.size() * (k_len + 1));
  for (std::size_t b = 0; b < lists.size(); ++b) {
    order.push_back(0);
    for (std::size_t k = 0; k < k_len; ++k) order.push_back(1 + b * k_len + k);
  }
  return gather_rows(stacked, order);
}

}  // namespace

std::vector<std::size_t> user_vocab_sizes(const WorldConfig& c) {
  std::vector<std::size_t> v(c.user_fields, c.user_field_vocab);
  v[0] = c.users;
  return v;
}

std::vector<std::size_t> item_vocab_sizes(const WorldConfig& c) {
  std::vector<std::size_t> v(c.item_fields, c.item_field_vocab);
  v[0] = c.items;
  return v;
}

void init_shared_features(ParameterSet& params, const ExperimentConfig& config, Rng& rng) {
  const std::size_t e = config.model.embed_dim;
  const std::size_t d = config.model_width();
  const auto iv = item_vocab_sizes(config.world);
  const auto uv = user_vocab_sizes(config.world);
  for (std::size_t f = 0; f < iv.size(); ++f) params.add(table_name("item", f), embedding_table(iv[f], e, rng));
  for (std::size_t f = 0; f < uv.size(); ++f) params.add(table_name("user", f), embedding_table(uv[f], e, rng));
  params.add("shared.refine.w", init_weight(d, d, rng));
  params.add("shared.refine.b", Tensor::zeros({d}, true));
}

Tensor joint_embeddings(const ParameterSet& params, const World& world, std::span<const int> users,
                        std::span<const int> items) {
  if (users.size() != items.size() || items.empty()) {
    throw DimensionError("joint_embeddings: need one user per item");
  }
  const std::size_t item_fields = world.config.item_fields;
  const std::size_t user_fields = world.config.user_fields;
  std::vector<Tensor> parts;
  std::vector<std::size_t> ids(items.size());
  for (std::size_t f = 0; f < item_fields; ++f) {
    for (std::size_t r = 0; r < items.size(); ++r) {
      ids[r] = static_cast<std::size_t>(world.item(items[r]).feature_ids[f]);
    }
    const auto& table = params.get(table_name("item", f));
    for (auto id : ids) {
      if (id >= table.rows()) throw VocabularyError("item feature id " + std::to_string(id) + " outside its table");
    }
    parts.push_back(gather_rows(table, ids));
  }
  for (std::size_t f = 0; f < user_fields; ++f) {
    for (std::size_t r = 0; r < users.size(); ++r) {
      ids[r] = static_cast<std::size_t>(world.user(users[r]).feature_ids[f]);
    }
    const auto& table = params.get(table_name("user", f));
    for (auto id : ids) {
      if (id >= table.rows()) throw VocabularyError("user feature id " + std::to_string(id) + " outside its table");
    }
    parts.push_back(gather_rows(table, ids));
  }
  return concat_cols(parts);
}

EvaluatorModel EvaluatorModel::init(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  EvaluatorModel m;
  m.config = config;
  const std::size_t d = config.model_width();
  init_shared_features(m.params, config, rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> cls(d);
  for (auto& x : cls) x = rng.uniform(-bound, bound);
  m.params.add("eval.cls", Tensor::from(std::move(cls), {d}));
  for (std::size_t l = 0; l < config.model.eval_layers; ++l) {
    init_transformer_layer(m.params, "eval.enc." + std::to_string(l) + ".", d, rng);
  }
  m.params.add("eval.point.w", init_weight(d, 1, rng));
  m.params.add("eval.point.b", Tensor::zeros({1}));
  m.params.add("eval.list.w", init_weight(d, 1, rng));
  m.params.add("eval.list.b", Tensor::zeros({1}));
  return m;
}

ParameterSet EvaluatorModel::skeleton(const ExperimentConfig& config) {
  return init(config, 0).params;
}

void save_evaluator(const std::string& path, const EvaluatorModel& model) {
  save_checkpoint(path, {ModelKind::kEvaluator, model.config, model.params});
}

EvaluatorModel load_evaluator(const std::string& path) {
  auto ckpt = load_checkpoint(path);
  if (ckpt.kind != ModelKind::kEvaluator) {
    throw CheckpointError(path + ": expected an evaluator checkpoint, found " + to_string(ckpt.kind));
  }
  try {
    ckpt.config.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(path + ": embedded config is invalid: " + e.what());
  }
  require_same_layout(EvaluatorModel::skeleton(ckpt.config), ckpt.params, path);
  return {std::move(ckpt.config), std::move(ckpt.params)};
}

Tensor build_eval_input(const EvaluatorModel& model, const World& world, int user_id,
                        std::span<const int> items) {
  const int users[] = {user_id};
  const std::vector<int> lists[] = {std::vector<int>(items.begin(), items.end())};
  return eval_inputs(model, world, users, lists);
}

EvaluatorOutput evaluator_forward(const EvaluatorModel& model, const World& world, int user_id,
                                  std::span<const int> items) {
  const int users[] = {user_id};
  const std::vector<int> lists[] = {std::vector<int>(items.begin(), items.end())};
  return evaluator_forward_batch(model, world, users, lists);
}

EvaluatorOutput evaluator_forward_batch(const EvaluatorModel& model, const World& world,
                                        std::span<const int> users,
                                        std::span<const std::vector<int>> lists) {
  const std::size_t heads = model.config.model.heads;
  Tensor h = eval_inputs(model, world, users, lists);
  for (std::size_t l = 0; l < model.config.model.eval_layers; ++l) {
    const auto w = TransformerLayerWeights::bind(model.params, "eval.enc." + std::to_string(l) + ".");
    h = transformer_encoder_layer(h, w, heads, lists.size());
  }
  const std::size_t k_len = lists[0].size();
  std::vector<std::size_t> item_rows, cls_rows;
  for (std::size_t b = 0; b < lists.size(); ++b) {
    cls_rows.push_back(b * (k_len + 1));
    for (std::size_t k = 0; k < k_len; ++k) item_rows.push_back(b * (k_len + 1) + 1 + k);
  }
  const auto& p = model.params;
  EvaluatorOutput out;
  out.y_point = sigmoid(linear(gather_rows(h, item_rows), p.get("eval.point.w"), p.get("eval.point.b")));
  out.y_cls = sigmoid(linear(gather_rows(h, cls_rows), p.get("eval.list.w"), p.get("eval.list.b")));
  return out;
}

Tensor loss_point(const Tensor& y_point_hat, std::span<const int> y_point) {
  if (y_point_hat.numel() != y_point.size()) {
    throw std::invalid_argument("loss_point: " + std::to_string(y_point_hat.numel()) +
                                " predictions for " + std::to_string(y_point.size()) + " labels");
  }
  std::vector<double> y(y_point.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y_point[i] != 0 && y_point[i] != 1) throw std::invalid_argument("loss_point: labels must be 0 or 1");
    y[i] = y_point[i];
  }
  const Tensor p = clamp(reshape(y_point_hat, {y.size()}), kPredictionClamp, 1.0 - kPredictionClamp);
  const Tensor labels = Tensor::from(y, {y.size()});
  const Tensor ll = labels * log(p) + (1.0 - labels) * log(1.0 - p);
  return -mean(ll);
}

Tensor loss_list(const Tensor& y_cls_hat, std::span<const double> y_list) {
  if (y_cls_hat.numel() != y_list.size()) {
    throw std::invalid_argument("loss_list: prediction and label counts differ");
  }
  for (double y : y_list) {
    if (!(y >= 0.0)) throw std::invalid_argument("loss_list: y_list must be non-negative");
  }
  const std::size_t n = y_list.size();
  const Tensor p = clamp(reshape(y_cls_hat, {n}), kPredictionClamp, 1.0 - kPredictionClamp);
  const Tensor y = Tensor::from(std::vector<double>(y_list.begin(), y_list.end()), {n});
  return -mean(y * log(p) + log(1.0 - p));
}

EvalLoss evaluator_loss(const EvaluatorModel& model, const World& world,
                        std::span<const InteractionRecord> batch) {
  std::vector<int> users;
  std::vector<std::vector<int>> lists;
  std::vector<int> labels;
  std::vector<double> utilities;
  for (const auto& r : batch) {
    users.push_back(r.user_id);
    lists.push_back(r.items);
    labels.insert(labels.end(), r.y_point.begin(), r.y_point.end());
    utilities.push_back(r.y_list);
  }
  const auto out = evaluator_forward_batch(model, world, users, lists);
  EvalLoss loss;
  loss.point = loss_point(out.y_point, labels);
  loss.list = loss_list(out.y_cls, utilities);
  loss.total = loss.point + loss.list;
  return loss;
}

std::vector<EpochLoss> pretrain_evaluator(EvaluatorModel& model, const World& world,
                                          std::span<const InteractionRecord> records,
                                          std::size_t epochs,
                                          const std::function<void(std::size_t, const EpochLoss&)>& on_epoch) {
  if (records.empty()) throw std::invalid_argument("pretrain_evaluator: empty dataset");
  const std::size_t batch = std::max<std::size_t>(1, model.config.optim.batch);
  auto state = OptimizerState::from(model.config.optim);
  std::vector<EpochLoss> history;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    Rng rng(child_seed(model.config.seed, 0x6576616cULL + epoch));
    const auto order = rng.sample_without_replacement(records.size(), records.size());
    EpochLoss acc;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::vector<InteractionRecord> mb;
      mb.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) mb.push_back(records[order[i]]);
      model.params.zero_grad();
      const auto loss = evaluator_loss(model, world, mb);
      backward(loss.total);
      adam_step(model.params, state);
      const auto w = static_cast<double>(mb.size());
      acc.point += loss.point.item() * w;
      acc.list += loss.list.item() * w;
      acc.total += loss.total.item() * w;
      seen += mb.size();
    }
    acc.point /= static_cast<double>(seen);
    acc.list /= static_cast<double>(seen);
    acc.total /= static_cast<double>(seen);
    history.push_back(acc);
    if (on_epoch) on_epoch(epoch, acc);
  }
  model.params.zero_grad();
  return history;
}

EpochLoss evaluate_losses(const EvaluatorModel& model, const World& world,
                          std::span<const InteractionRecord> records) {
  if (records.empty()) throw std::invalid_argument("evaluate_losses: empty dataset");
  NoGradGuard guard;
  EpochLoss acc;
  const std::size_t batch = 256;
  for (std::size_t start = 0; start < records.size(); start += batch) {
    const auto chunk = records.subspan(start, std::min(batch, records.size() - start));
    const auto loss = evaluator_loss(model, world, chunk);
    const auto w = static_cast<double>(chunk.size());
    acc.point += loss.point.item() * w;
    acc.list += loss.list.item() * w;
    acc.total += loss.total.item() * w;
  }
  const auto n = static_cast<double>(records.size());
  acc.point /= n;
  acc.list /= n;
  acc.total /= n;
  return acc;
}

}  // namespace eglr
