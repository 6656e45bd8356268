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

// Binary checkpoint layout (little endian):
//   "EGLRCKPT" | u32 version | u32 kind | u32 len, config text
//   | u32 tensor count | per tensor: u32 len, name, u32 rank, u64 dims[rank], f64 data[]
// Tensors are written in lexicographic name order.

#pragma once

#include <cstdint>
#include <string>

#include "eglr/config.hpp"
#include "eglr/nn.hpp"

namespace eglr {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class ModelKind : std::uint32_t { kEvaluator = 1, kGenerator = 2 };

std::string to_string(ModelKind kind);

struct Checkpoint {
  ModelKind kind = ModelKind::kEvaluator;
  ExperimentConfig config;
  ParameterSet params;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
/// Throws CheckpointError on bad magic, version mismatch or truncation.
Checkpoint load_checkpoint(const std::string& path);

/// Throws CheckpointError unless `actual` has exactly the names and shapes of
/// `expected`.
void require_same_layout(const ParameterSet& expected, const ParameterSet& actual,
                         const std::string& what);

}  // namespace eglr
