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
#include <numeric>

#include "doctest.h"
#include "eglr/errors.hpp"
#include "eglr/nn.hpp"
#include "gradcheck.hpp"

using namespace eglr;
using eglr::testing::check_gradients;
using eglr::testing::random_tensor;

namespace {

constexpr double kGradTol = 1e-6;

ParameterSet layer_params(std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  ParameterSet p;
  init_transformer_layer(p, "layer.", d, rng);
  // Perturb norms/biases away from their trivial init so every path is tested.
  for (auto& [name, t] : p) {
    if (name.find(".b") != std::string::npos || name.find("ln") != std::string::npos) {
      for (auto& x : t.mutable_data()) x += rng.uniform(-0.2, 0.2);
    }
  }
  return p;
}

std::vector<Tensor> leaves_of(const ParameterSet& p) {
  std::vector<Tensor> out;
  for (const auto& [_, t] : p) out.push_back(t);
  return out;
}

}  // namespace

TEST_CASE("matmul") {
  SUBCASE("identity") {
    const auto eye = Tensor::matrix({{1, 0}, {0, 1}});
    const auto m = Tensor::matrix({{1, 2}, {3, 4}});
    CHECK(matmul(eye, m).to_vector() == std::vector<double>{1, 2, 3, 4});
  }
  SUBCASE("zero row") {
    const auto out = matmul(Tensor::matrix({{1, 0}}), Tensor::matrix({{0}, {5}}));
    CHECK(out.shape() == Shape{1, 1});
    CHECK(out.item() == 0.0);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), DimensionError);
  }
  SUBCASE("gradient of sum vs finite differences") {
    Rng rng(11);
    auto a = random_tensor({3, 4}, rng);
    auto b = random_tensor({4, 2}, rng);
    const auto r = check_gradients([&] { return sum(matmul(a, b)); }, {a, b});
    CHECK(r.rel_error <= kGradTol);
  }
}

TEST_CASE("softmax_with_temperature") {
  SUBCASE("uniform logits") {
    const auto p = softmax_with_temperature(Tensor::vector({0, 0, 0}), 1.0);
    for (double x : p.data()) CHECK(x == doctest::Approx(1.0 / 3).epsilon(1e-15));
  }
  SUBCASE("closed form for any offset") {
    for (double c : {-50.0, 0.0, 3.5, 700.0}) {
      const auto p = softmax_with_temperature(Tensor::vector({c, c + std::log(3.0)}), 1.0);
      CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-12));
      CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-12));
    }
  }
  SUBCASE("flat limit") {
    const auto p = softmax_with_temperature(Tensor::vector({1, 2, 3}), 100.0);
    for (double x : p.data()) CHECK(std::abs(x - 1.0 / 3) < 0.01);
  }
  SUBCASE("bad temperature") {
    CHECK_THROWS_AS(softmax_with_temperature(Tensor::vector({1, 2}), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(softmax_with_temperature(Tensor::vector({1, 2}), -1.0), std::invalid_argument);
  }
  SUBCASE("normalisation and range, random") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      const auto n = 1 + rng.uniform_int(30);
      const double tau = rng.uniform(0.05, 20.0);
      const auto p = softmax_with_temperature(random_tensor({n}, rng, false, -30, 30), tau);
      double s = 0.0;
      for (double x : p.data()) {
        CHECK(x > 0.0);
        CHECK(x <= 1.0);
        s += x;
      }
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
  }
  SUBCASE("entropy non-decreasing in temperature") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      const auto logits = random_tensor({8}, rng, false, -4, 4).to_vector();
      double prev = 0.0;
      for (double tau = 0.05; tau < 50.0; tau *= 1.3) {
        const double h = softmax_entropy(logits, tau);
        CHECK(h >= prev - 1e-12);
        prev = h;
      }
    }
  }
}

TEST_CASE("sinusoidal_position_encoding") {
  const auto pe = sinusoidal_position_encoding(6, 8);
  CHECK(pe.shape() == Shape{6, 8});
  for (std::size_t c = 0; c < 8; ++c) CHECK(pe.at(0, c) == (c % 2 == 0 ? 0.0 : 1.0));
  for (double x : pe.data()) CHECK(std::abs(x) <= 1.0);
  for (std::size_t dim : {2, 4, 16, 64}) {
    CHECK(sinusoidal_position_encoding(3, dim).at(1, 0) == doctest::Approx(0.841471).epsilon(1e-6));
  }
  CHECK_THROWS_AS(sinusoidal_position_encoding(3, 7), std::invalid_argument);
}

TEST_CASE("masked_multi_head_attention") {
  const std::size_t d = 8;
  Rng rng(7);
  ParameterSet p;
  init_attention(p, "a.", d, rng);
  const auto w = AttentionWeights::bind(p, "a.");

  SUBCASE("single token gets weight 1") {
    std::vector<double> weights;
    masked_multi_head_attention(random_tensor({1, d}, rng, false), w, 4, false, 1, &weights);
    for (double a : weights) CHECK(a == 1.0);
  }
  SUBCASE("causal mask leaves earlier rows bit-identical") {
    const auto seq = random_tensor({5, d}, rng, false);
    const auto base = masked_multi_head_attention(seq, w, 2, true);
    for (std::size_t t = 0; t < 5; ++t) {
      auto perturbed = seq.clone();
      for (std::size_t c = 0; c < d; ++c) perturbed.mutable_data()[t * d + c] += 0.37 * (c + 1);
      const auto out = masked_multi_head_attention(perturbed, w, 2, true);
      for (std::size_t i = 0; i < t * d; ++i) CHECK(out[i] == base[i]);
    }
  }
  SUBCASE("identical rows attend uniformly") {
    std::vector<double> row(d);
    for (auto& x : row) x = rng.uniform(-1, 1);
    std::vector<double> data;
    for (int t = 0; t < 4; ++t) data.insert(data.end(), row.begin(), row.end());
    std::vector<double> weights;
    masked_multi_head_attention(Tensor::from(data, {4, d}), w, 2, false, 1, &weights);
    for (double a : weights) CHECK(a == doctest::Approx(0.25).epsilon(1e-14));
  }
  SUBCASE("width not divisible by heads") {
    CHECK_THROWS_AS(masked_multi_head_attention(Tensor::zeros({2, d}), w, 3, false),
                    std::invalid_argument);
  }
}

TEST_CASE("transformer layers") {
  const std::size_t d = 8;
  auto p = layer_params(d, 21);
  const auto w = TransformerLayerWeights::bind(p, "layer.");
  Rng rng(9);

  SUBCASE("shape preservation") {
    for (std::size_t t : {1, 2, 7}) {
      CHECK(transformer_encoder_layer(random_tensor({t, d}, rng, false), w, 2).shape() ==
            Shape{t, d});
      CHECK(transformer_decoder_layer(random_tensor({t, d}, rng, false), w, 2).shape() ==
            Shape{t, d});
    }
  }
  SUBCASE("encoder gradient vs finite differences") {
    auto x = random_tensor({4, d}, rng);
    auto proj = random_tensor({4, d}, rng, false);
    auto leaves = leaves_of(p);
    leaves.push_back(x);
    const auto r = check_gradients(
        [&] { return sum(mul(transformer_encoder_layer(x, w, 2), proj)); }, leaves);
    CHECK(r.rel_error <= kGradTol);
  }
  SUBCASE("decoder gradient vs finite differences") {
    auto x = random_tensor({4, d}, rng);
    auto proj = random_tensor({4, d}, rng, false);
    auto leaves = leaves_of(p);
    leaves.push_back(x);
    const auto r = check_gradients(
        [&] { return sum(mul(transformer_decoder_layer(x, w, 4), proj)); }, leaves);
    CHECK(r.rel_error <= kGradTol);
  }
  SUBCASE("decoder causality") {
    const auto seq = random_tensor({6, d}, rng, false);
    const auto base = transformer_decoder_layer(seq, w, 2);
    auto perturbed = seq.clone();
    for (std::size_t c = 0; c < d; ++c) perturbed.mutable_data()[4 * d + c] -= 1.1;
    const auto out = transformer_decoder_layer(perturbed, w, 2);
    for (std::size_t i = 0; i < 4 * d; ++i) CHECK(out[i] == base[i]);
  }
  SUBCASE("incremental decoding matches full recompute") {
    const auto seq = random_tensor({6, d}, rng, false);
    LayerCache cache;
    for (std::size_t t = 0; t < 6; ++t) {
      const auto step = transformer_decoder_step(slice_rows(seq, t, t + 1), w, 2, cache);
      const auto full = transformer_decoder_layer(slice_rows(seq, 0, t + 1), w, 2);
      for (std::size_t c = 0; c < d; ++c) CHECK(std::abs(step[c] - full.at(t, c)) <= 1e-12);
    }
    CHECK(cache.length == 6);
  }
  SUBCASE("batched sequences match one-at-a-time") {
    const auto a = random_tensor({3, d}, rng, false);
    const auto b = random_tensor({3, d}, rng, false);
    const Tensor both[] = {a, b};
    const auto batched = transformer_encoder_layer(concat_rows(both), w, 2, 2);
    const auto ya = transformer_encoder_layer(a, w, 2);
    const auto yb = transformer_encoder_layer(b, w, 2);
    for (std::size_t i = 0; i < 3 * d; ++i) {
      CHECK(std::abs(batched[i] - ya[i]) <= 1e-12);
      CHECK(std::abs(batched[3 * d + i] - yb[i]) <= 1e-12);
    }
  }
  SUBCASE("determinism") {
    const auto seq = random_tensor({5, d}, rng, false);
    const auto y1 = transformer_encoder_layer(seq, w, 2).to_vector();
    const auto y2 = transformer_encoder_layer(seq, w, 2).to_vector();
    CHECK(y1 == y2);
  }
}

TEST_CASE("backward") {
  SUBCASE("quadratic") {
    auto w = Tensor::vector({1.5, -2.0, 0.25}, true);
    backward(sum(square(w)));
    for (std::size_t i = 0; i < 3; ++i) CHECK(w.grad()[i] == 2.0 * w[i]);
  }
  SUBCASE("softmax + log composite vs finite differences") {
    Rng rng(13);
    auto logits = random_tensor({2, 5}, rng);
    auto target = random_tensor({2, 5}, rng, false, 0, 1);
    const auto r = check_gradients(
        [&] {
          return sum(mul(log(softmax_rows(logits, 0.7)), target)) +
                 sum(mul(log_softmax_rows(logits, 1.3), target));
        },
        {logits});
    CHECK(r.rel_error <= kGradTol);
  }
  SUBCASE("elementwise and assembly ops vs finite differences") {
    Rng rng(17);
    auto a = random_tensor({3, 4}, rng);
    auto b = random_tensor({3, 4}, rng, true, 0.5, 1.5);
    auto bias = random_tensor({4}, rng);
    const std::size_t idx[] = {2, 0, 2};
    const auto r = check_gradients(
        [&] {
          const Tensor parts[] = {sigmoid(a), relu(add_row(a, bias))};
          const auto cat = concat_cols(parts);
          const Tensor rows[] = {gather_rows(cat, idx), sum_rows(cat)};
          const auto stacked = concat_rows(rows);
          return sum(mul(stacked, stacked)) + mean(log(b)) + pick(exp(transpose(a - b)), 5) +
                 sum(mean_cols(clamp(a, -0.5, 0.5))) + sum(scale(reshape(b, {12}), 0.3));
        },
        {a, b, bias});
    CHECK(r.rel_error <= kGradTol);
  }
  SUBCASE("constant loss gives zero grads") {
    auto w = Tensor::vector({1.0, 2.0}, true);
    auto unused = Tensor::vector({3.0}, true);
    backward(sum(Tensor::vector({4.0, 5.0})) + scale(sum(w), 0.0));
    for (double g : w.grad()) CHECK(g == 0.0);
    for (double g : unused.grad()) CHECK(g == 0.0);
  }
  SUBCASE("non-scalar loss") {
    CHECK_THROWS_AS(backward(Tensor::zeros({2, 2}, true)), std::invalid_argument);
  }
  SUBCASE("no-grad guard records nothing") {
    auto w = Tensor::vector({1.0}, true);
    Tensor y;
    {
      NoGradGuard guard;
      y = square(w);
    }
    CHECK_FALSE(y.requires_grad());
  }
  SUBCASE("anomaly detection") {
    const bool prev = anomaly_detection();
    set_anomaly_detection(true);
    CHECK_THROWS_AS(log(Tensor::vector({-1.0})), NumericError);
    set_anomaly_detection(prev);
  }
}

TEST_CASE("ParameterSet") {
  ParameterSet p;
  p.add("z", Tensor::zeros({2}));
  p.add("a", Tensor::zeros({1}));
  CHECK_THROWS_AS(p.add("a", Tensor::zeros({1})), std::invalid_argument);
  std::vector<std::string> names;
  for (const auto& [n, t] : p) {
    names.push_back(n);
    CHECK(t.requires_grad());
  }
  CHECK(names == std::vector<std::string>{"a", "z"});
  auto copy = p.deep_copy();
  CHECK(identical(p, copy));
  copy.get("z").mutable_data()[0] = 1.0;
  CHECK_FALSE(identical(p, copy));
}
