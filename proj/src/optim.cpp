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

#include "eglr/optim.hpp"

#include <cmath>

#include "eglr/errors.hpp"

namespace eglr {

void adam_step(ParameterSet& params, OptimizerState& state) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (auto& [name, p] : params) {
    const std::size_t n = p.numel();
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.empty() && v.empty()) {
      m.assign(n, 0.0);
      v.assign(n, 0.0);
    }
    if (m.size() != n || v.size() != n) {
      throw DimensionError("adam: moment buffers of '" + name + "' do not match the parameter");
    }
    const auto g = p.has_grad() ? p.grad() : std::span<const double>{};
    auto x = p.mutable_data();
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = g.empty() ? 0.0 : g[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
      const double mh = m[i] / c1;
      const double vh = v[i] / c2;
      x[i] -= state.lr * mh / (std::sqrt(vh) + state.eps);
    }
  }
}

}  // namespace eglr
