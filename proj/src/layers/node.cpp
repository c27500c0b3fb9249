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

namespace {

// a + s * b, elementwise.
Tensor axpy(const Tensor& a, double s, const Tensor& b) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * b[i];
  return out;
}

}  // namespace

NodeBlock::NodeBlock(ParamStore& store, const std::string& prefix, std::size_t dim,
                     std::size_t steps, std::uint64_t seed, double t0, double t1)
    : dim_(dim), steps_(steps), t0_(t0), t1_(t1) {
  if (steps < 1) throw std::invalid_argument("node: solver steps must be >= 1");
  const std::string wn = prefix + ".W_f";
  w_ = store.add(wn, uniform_init({dim, dim}, dim, seed, wn), ParamKind::weight);
  b_ = store.add(prefix + ".b_f", Tensor({dim}), ParamKind::bias);
}

Tensor NodeBlock::forward(const ParamStore& store, const Tensor& h0, Cache* cache) const {
  if (h0.rank() != 2 || h0.dim(1) != dim_) {
    throw std::invalid_argument("node: expected input [B, " + std::to_string(dim_) + "], got " +
                                shape_str(h0.shape()));
  }
  const Tensor& w = store.value(w_);
  const Tensor& b = store.value(b_);
  const double dt = (t1_ - t0_) / static_cast<double>(steps_);
  if (cache) cache->stage_inputs.clear();

  Tensor h = h0;
  for (std::size_t s = 0; s < steps_; ++s) {
    std::array<Tensor, 4> u;
    u[0] = h;
    Tensor k1 = linear_forward(u[0], w, b);
    u[1] = axpy(h, 0.5 * dt, k1);
    Tensor k2 = linear_forward(u[1], w, b);
    u[2] = axpy(h, 0.5 * dt, k2);
    Tensor k3 = linear_forward(u[2], w, b);
    u[3] = axpy(h, dt, k3);
    Tensor k4 = linear_forward(u[3], w, b);
    for (std::size_t i = 0; i < h.size(); ++i) {
      h[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if (cache) cache->stage_inputs.push_back(std::move(u));
  }
  return h;
}

Tensor NodeBlock::backward(ParamStore& store, Cache&& cache, const Tensor& dy) const {
  if (cache.stage_inputs.size() != steps_) {
    throw std::logic_error("node backward: cache does not come from this block");
  }
  require_shape(dy, cache.stage_inputs[0][0].shape(), "node backward upstream");
  const Tensor& w = store.value(w_);
  const double dt = (t1_ - t0_) / static_cast<double>(steps_);

  Tensor dh = dy;
  for (std::size_t s = steps_; s-- > 0;) {
    auto& u = cache.stage_inputs[s];
    Tensor dk1 = dh, dk2 = dh, dk3 = dh, dk4 = dh;
    dk1 *= dt / 6.0;
    dk2 *= dt / 3.0;
    dk3 *= dt / 3.0;
    dk4 *= dt / 6.0;
    Tensor dh_prev = dh;

    // Reverse through k4 = f(h + dt k3), k3 = f(h + dt/2 k2), ...
    LinearGrads g4 = linear_backward(u[3], w, dk4);
    dh_prev += g4.dx;
    dk3 = axpy(dk3, dt, g4.dx);
    LinearGrads g3 = linear_backward(u[2], w, dk3);
    dh_prev += g3.dx;
    dk2 = axpy(dk2, 0.5 * dt, g3.dx);
    LinearGrads g2 = linear_backward(u[1], w, dk2);
    dh_prev += g2.dx;
    dk1 = axpy(dk1, 0.5 * dt, g2.dx);
    LinearGrads g1 = linear_backward(u[0], w, dk1);
    dh_prev += g1.dx;

    for (const LinearGrads* g : {&g1, &g2, &g3, &g4}) {
      store.grad(w_) += g->dw;
      store.grad(b_) += g->db;
    }
    dh = std::move(dh_prev);
  }
  cache.stage_inputs.clear();
  return dh;
}

}  // namespace rulnet
