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

#include <stdexcept>

#include "rulnet/layers.hpp"

namespace rulnet {

Tensor dropout(const Tensor& x, double rate, Mode mode, CounterRng& rng, DropoutCache* cache) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout: rate must be in [0, 1)");
  }
  if (cache) cache->scale.clear();
  if (mode == Mode::eval || rate == 0.0) return x;

  const double keep = 1.0 / (1.0 - rate);
  std::vector<double> scale(x.size());
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    scale[i] = rng.uniform() < rate ? 0.0 : keep;
    y[i] = x[i] * scale[i];
  }
  if (cache) cache->scale = std::move(scale);
  return y;
}

Tensor dropout_backward(DropoutCache&& cache, const Tensor& dy) {
  if (cache.scale.empty()) return dy;
  if (cache.scale.size() != dy.size()) {
    throw std::invalid_argument("dropout backward: mask size mismatch");
  }
  Tensor dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * cache.scale[i];
  cache.scale.clear();
  return dx;
}

}  // namespace rulnet
