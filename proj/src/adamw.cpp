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

#include "rulnet/adamw.hpp"

#include <cmath>

#include "rulnet/error.hpp"

namespace rulnet {

void AdamWConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must be in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
}

AdamWState AdamWState::for_store(const ParamStore& store) {
  AdamWState s;
  for (const auto& p : store.entries()) {
    s.m.emplace_back(p.value.shape());
    s.v.emplace_back(p.value.shape());
  }
  return s;
}

void adamw_step(ParamStore& store, AdamWState& state, const AdamWConfig& config,
                std::uint64_t step_index) {
  if (step_index < 1) throw ConfigError("adamw_step: step_index must be >= 1");
  if (state.m.size() != store.size()) state = AdamWState::for_store(store);
  const double t = static_cast<double>(step_index);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  const double lr = config.learning_rate;

  for (std::size_t p = 0; p < store.size(); ++p) {
    Parameter& param = store[p];
    if (!param.trainable()) continue;
    const double decay = param.kind == ParamKind::weight ? 1.0 - lr * config.weight_decay : 1.0;
    double* w = param.value.ptr();
    const double* g = param.grad.ptr();
    double* m = state.m[p].ptr();
    double* v = state.v[p].ptr();
    for (std::size_t i = 0, n = param.value.size(); i < n; ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] = w[i] * decay - lr * mhat / (std::sqrt(vhat) + config.eps);
    }
  }
}

}  // namespace rulnet
