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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "eglr/config.hpp"
#include "eglr/nn.hpp"

namespace eglr {

struct OptimizerState {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::map<std::string, std::vector<double>, std::less<>> m;
  std::map<std::string, std::vector<double>, std::less<>> v;

  static OptimizerState from(const OptimConfig& c) {
    OptimizerState s;
    s.lr = c.lr;
    s.beta1 = c.beta1;
    s.beta2 = c.beta2;
    s.eps = c.eps;
    return s;
  }
};

/// One Adam update with bias correction. Parameters without a gradient
/// buffer are treated as having a zero gradient. Throws DimensionError when
/// a moment buffer does not match its parameter.
void adam_step(ParameterSet& params, OptimizerState& state);

}  // namespace eglr
