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

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "eglr/checkpoint.hpp"
#include "eglr/errors.hpp"
#include "eglr/evaluator.hpp"
#include "gradcheck.hpp"
#include "toy.hpp"

using namespace eglr;
using eglr::testing::toy_config;

namespace {

std::string temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "eglr_test_evaluator";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

struct Toy {
  ExperimentConfig config = toy_config();
  World world = generate_world(config.world, 11);
  EvaluatorModel model = EvaluatorModel::init(config, 12);
};

}  // namespace

TEST_CASE("build_eval_input") {
  Toy t;
  const std::size_t d = t.config.model_width();
  const std::size_t du = t.config.model.embed_dim * t.config.world.user_fields;
  const std::vector<int> list = {3, 9, 14, 20};

  SUBCASE("shape") {
    const auto x = build_eval_input(t.model, t.world, 0, list);
    CHECK(x.rows() == list.size() + 1);
    CHECK(x.cols() == d);
    for (std::size_t c = 0; c < d; ++c) CHECK(x.at(0, c) == t.model.params.get("eval.cls")[c]);
  }
  SUBCASE("two users differ only in the user suffix") {
    const auto a = build_eval_input(t.model, t.world, 1, list);
    const auto b = build_eval_input(t.model, t.world, 2, list);
    for (std::size_t r = 1; r < a.rows(); ++r) {
      bool suffix_differs = false;
      for (std::size_t c = 0; c < d; ++c) {
        if (c < d - du) {
          CHECK(a.at(r, c) == b.at(r, c));
        } else if (a.at(r, c) != b.at(r, c)) {
          suffix_differs = true;
        }
      }
      CHECK(suffix_differs);
    }
  }
  SUBCASE("swapping two items permutes the position-stripped rows") {
    const auto pe = sinusoidal_position_encoding(list.size(), d);
    std::vector<int> swapped = list;
    std::swap(swapped[0], swapped[1]);
    const auto a = build_eval_input(t.model, t.world, 0, list);
    const auto b = build_eval_input(t.model, t.world, 0, swapped);
    for (std::size_t c = 0; c < d; ++c) {
      CHECK(a.at(1, c) - pe.at(0, c) == doctest::Approx(b.at(2, c) - pe.at(1, c)).epsilon(1e-12));
      CHECK(a.at(2, c) - pe.at(1, c) == doctest::Approx(b.at(1, c) - pe.at(0, c)).epsilon(1e-12));
      CHECK(a.at(3, c) == b.at(3, c));
    }
  }
  SUBCASE("unknown ids") {
    const std::vector<int> bad = {1, 999};
    CHECK_THROWS_AS(build_eval_input(t.model, t.world, 0, bad), VocabularyError);
    CHECK_THROWS_AS(build_eval_input(t.model, t.world, 99, list), VocabularyError);
  }
}

TEST_CASE("evaluator_forward") {
  Toy t;
  NoGradGuard guard;
  SUBCASE("outputs are probabilities") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const auto list = eglr::testing::random_ids(rng, t.config.world.items, 5);
      const auto out = evaluator_forward(t.model, t.world, static_cast<int>(rng.uniform_int(6)), list);
      CHECK(out.y_point.numel() == 5);
      for (double y : out.y_point.data()) {
        CHECK(y > 0.0);
        CHECK(y < 1.0);
      }
      CHECK(out.y_cls.item() > 0.0);
      CHECK(out.y_cls.item() < 1.0);
    }
  }
  SUBCASE("order sensitivity") {
    const std::vector<int> list = {2, 5, 7, 11};
    const std::vector<int> perm = {7, 2, 11, 5};
    const auto a = evaluator_forward(t.model, t.world, 0, list);
    const auto b = evaluator_forward(t.model, t.world, 0, perm);
    double max_diff = std::abs(a.y_cls.item() - b.y_cls.item());
    // Compare each item's prediction across the two orders.
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto j = static_cast<std::size_t>(std::find(perm.begin(), perm.end(), list[i]) - perm.begin());
      max_diff = std::max(max_diff, std::abs(a.y_point[i] - b.y_point[j]));
    }
    CHECK(max_diff > 1e-9);
  }
  SUBCASE("single-item list") {
    const std::vector<int> one = {4};
    const auto out = evaluator_forward(t.model, t.world, 0, one);
    CHECK(out.y_point.numel() == 1);
  }
  SUBCASE("batched equals single") {
    const std::vector<std::vector<int>> lists = {{1, 2, 3}, {4, 5, 6}, {9, 8, 7}};
    const std::vector<int> users = {0, 3, 5};
    const auto batch = evaluator_forward_batch(t.model, t.world, users, lists);
    for (std::size_t b = 0; b < lists.size(); ++b) {
      const auto one = evaluator_forward(t.model, t.world, users[b], lists[b]);
      for (std::size_t k = 0; k < 3; ++k) CHECK(batch.y_point[b * 3 + k] == doctest::Approx(one.y_point[k]).epsilon(1e-12));
      CHECK(batch.y_cls[b] == doctest::Approx(one.y_cls.item()).epsilon(1e-12));
    }
  }
  SUBCASE("determinism") {
    const std::vector<int> list = {1, 2, 3};
    CHECK(evaluator_forward(t.model, t.world, 1, list).y_point.to_vector() ==
          evaluator_forward(t.model, t.world, 1, list).y_point.to_vector());
  }
}

TEST_CASE("loss_point") {
  const int y2[] = {1, 0};
  CHECK(loss_point(Tensor::vector({0.9, 0.1}), y2).item() == doctest::Approx(0.105361).epsilon(1e-6));
  const int y3[] = {1, 0, 1};
  CHECK(loss_point(Tensor::vector({0.5, 0.5, 0.5}), y3).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(loss_point(Tensor::vector({1.0, 0.0, 1.0}), y3).item() <= 1e-10);
  CHECK_THROWS_AS(loss_point(Tensor::vector({0.5}), y3), std::invalid_argument);
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(4);
    std::vector<int> y(4);
    for (std::size_t i = 0; i < 4; ++i) {
      p[i] = rng.uniform();
      y[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    CHECK(loss_point(Tensor::vector(p), y).item() >= 0.0);
  }
}

TEST_CASE("loss_list") {
  const double one[] = {1.0};
  CHECK(loss_list(Tensor::vector({0.5}), one).item() == doctest::Approx(1.386294).epsilon(1e-6));
  const double zero[] = {0.0};
  CHECK(loss_list(Tensor::vector({0.3}), zero).item() == doctest::Approx(-std::log(0.7)).epsilon(1e-12));
  CHECK(loss_list(Tensor::vector({0.01}), zero).item() < loss_list(Tensor::vector({0.3}), zero).item());
  const double neg[] = {-1.0};
  CHECK_THROWS_AS(loss_list(Tensor::vector({0.5}), neg), std::invalid_argument);

  // Grid search oracle for the minimiser y / (y + 1).
  for (double y : {0.25, 1.0, 2.5, 7.0}) {
    const double target[] = {y};
    double best_p = 0.0, best = 1e300;
    for (int i = 1; i < 100000; ++i) {
      const double p = i * 1e-5;
      const double l = loss_list(Tensor::vector({p}), target).item();
      if (l < best) {
        best = l;
        best_p = p;
      }
    }
    CHECK(std::abs(best_p - y / (y + 1.0)) < 1e-3);
  }
}

TEST_CASE("evaluator loss gradients match finite differences") {
  Toy t;
  auto ds = build_dataset(t.world, 2, 3, 6, 21);
  // Pull the list-utility labels into a moderate range.
  for (auto& r : ds.interactions) r.y_list *= 0.5;
  std::vector<Tensor> leaves;
  for (auto& [name, p] : t.model.params) leaves.push_back(p);
  const auto check = eglr::testing::check_gradients(
      [&] { return evaluator_loss(t.model, t.world, ds.interactions).total; }, leaves);
  CHECK(check.analytic_norm > 0.0);
  CHECK(check.rel_error <= 1e-6);

  SUBCASE("total is the sum of both terms") {
    const auto l = evaluator_loss(t.model, t.world, ds.interactions);
    CHECK(l.total.item() == l.point.item() + l.list.item());
  }
}

TEST_CASE("pretrain_evaluator") {
  Toy t;
  const auto ds = build_dataset(t.world, 96, 3, 6, 5);
  SUBCASE("zero epochs is a no-op") {
    const auto before = t.model.params.deep_copy();
    CHECK(pretrain_evaluator(t.model, t.world, ds.interactions, 0).empty());
    CHECK(identical(before, t.model.params));
  }
  SUBCASE("training loss decreases") {
    const auto hist = pretrain_evaluator(t.model, t.world, ds.interactions, 8);
    REQUIRE(hist.size() == 8);
    CHECK(hist.back().total < hist.front().total);
    CHECK(hist.back().point < hist.front().point);
  }
  SUBCASE("refine weights receive no update") {
    const auto before = t.model.params.subset("shared.refine.").deep_copy();
    pretrain_evaluator(t.model, t.world, ds.interactions, 1);
    CHECK(identical(before, t.model.params.subset("shared.refine.")));
  }
  SUBCASE("empty dataset") {
    CHECK_THROWS_AS(pretrain_evaluator(t.model, t.world, {}, 1), std::invalid_argument);
  }
  SUBCASE("deterministic") {
    Toy u;
    pretrain_evaluator(t.model, t.world, ds.interactions, 2);
    pretrain_evaluator(u.model, u.world, ds.interactions, 2);
    CHECK(identical(t.model.params, u.model.params));
  }
}

TEST_CASE("checkpoints") {
  Toy t;
  const auto path = temp_path("eval.ckpt");
  save_evaluator(path, t.model);
  const std::vector<int> list = {3, 1, 4};

  SUBCASE("round trip reproduces outputs bit-exactly") {
    const auto loaded = load_evaluator(path);
    CHECK(identical(loaded.params, t.model.params));
    CHECK(loaded.config == t.model.config);
    NoGradGuard guard;
    CHECK(evaluator_forward(loaded, t.world, 2, list).y_point.to_vector() ==
          evaluator_forward(t.model, t.world, 2, list).y_point.to_vector());
  }
  SUBCASE("version mismatch") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const std::uint32_t v = 99;
    f.write(reinterpret_cast<const char*>(&v), 4);
    f.close();
    try {
      load_evaluator(path);
      FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
      CHECK(std::string(e.what()).find("version 99") != std::string::npos);
    }
  }
  SUBCASE("bad magic") {
    std::ofstream(path, std::ios::binary) << "NOTACKPT";
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  }
  SUBCASE("truncated") {
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  }
  SUBCASE("wrong kind") {
    save_checkpoint(path, {ModelKind::kGenerator, t.model.config, t.model.params});
    CHECK_THROWS_AS(load_evaluator(path), CheckpointError);
  }
  SUBCASE("incompatible architecture") {
    auto cfg = t.model.config;
    cfg.model.eval_layers = 2;
    save_checkpoint(path, {ModelKind::kEvaluator, cfg, t.model.params});
    CHECK_THROWS_AS(load_evaluator(path), CheckpointError);
  }
  SUBCASE("tensors are stored in lexicographic order") {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    std::size_t last = 0;
    std::string prev;
    for (const auto& [name, p] : t.model.params) {
      const auto at = bytes.find(name, last);
      REQUIRE(at != std::string::npos);
      CHECK(name > prev);
      prev = name;
      last = at;
    }
  }
}
