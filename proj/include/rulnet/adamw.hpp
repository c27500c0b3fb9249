// Copyright 2026 The rulnet Authors. All Rights Reserved.
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
#include <vector>

#include "rulnet/param_store.hpp"

namespace rulnet {

struct AdamWConfig {
  double learning_rate = 5e-4;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

// First and second moments, one tensor per store entry.
struct AdamWState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static AdamWState for_store(const ParamStore& store);
};

// One decoupled-decay update with bias correction (step_index >= 1):
//   p <- p (1 - lr wd) - lr mhat / (sqrt(vhat) + eps)
// Decay applies to `weight` entries only; buffers and frozen entries are
// left untouched.
void adamw_step(ParamStore& store, AdamWState& state, const AdamWConfig& config,
                std::uint64_t step_index);

}  // namespace rulnet
