# Copyright 2026 The EGLR Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Generative list re-ranking with entropy-guided latent reasoning."""

from eglr._eglr import (
    Config,
    Evaluator,
    Generator,
    World,
    dcg_upper_bound,
    group_advantages,
    map_at_k,
    ndcg_at_k,
    reward_dcg,
    run_cli,
    softmax_entropy,
)

__all__ = [
    "Config",
    "Evaluator",
    "Generator",
    "World",
    "dcg_upper_bound",
    "group_advantages",
    "map_at_k",
    "ndcg_at_k",
    "reward_dcg",
    "run_cli",
    "softmax_entropy",
]
