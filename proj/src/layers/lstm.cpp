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

#include <cmath>
#include <stdexcept>

#include "rulnet/layers.hpp"

namespace rulnet {

namespace {

constexpr const char* kGateNames[4] = {"i", "f", "o", "c"};

Tensor slice_step(const Tensor& x, std::size_t t) {
  const std::size_t batch = x.dim(0), steps = x.dim(1), d = x.dim(2);
  Tensor out({batch, d});
  for (std::size_t b = 0; b < batch; ++b) {
    const double* src = x.ptr() + (b * steps + t) * d;
    std::copy(src, src + d, out.ptr() + b * d);
  }
  return out;
}

void store_step(Tensor& y, std::size_t t, const Tensor& h) {
  const std::size_t batch = y.dim(0), steps = y.dim(1), d = y.dim(2);
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy(h.ptr() + b * d, h.ptr() + (b + 1) * d, y.ptr() + (b * steps + t) * d);
  }
}

}  // namespace

LstmStack::LstmStack(ParamStore& store, const std::string& prefix, std::size_t in_dim,
                     std::size_t hidden, std::size_t layers, std::uint64_t seed)
    : in_(in_dim), hidden_(hidden) {
  if (layers == 0 || hidden == 0 || in_dim == 0) {
    throw std::invalid_argument("lstm: layers, hidden and input size must be positive");
  }
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t d = l == 0 ? in_dim : hidden;
    std::array<GateParams, 4> g{};
    for (std::size_t k = 0; k < 4; ++k) {
      const std::string base = prefix + "." + std::to_string(l) + ".";
      const std::string wn = base + "W_" + kGateNames[k];
      const std::string un = base + "U_" + kGateNames[k];
      const std::string bn = base + "b_" + kGateNames[k];
      g[k].w = store.add(wn, uniform_init({d, hidden}, d, seed, wn), ParamKind::weight);
      g[k].u = store.add(un, uniform_init({hidden, hidden}, hidden, seed, un), ParamKind::weight);
      g[k].b = store.add(bn, Tensor({hidden}), ParamKind::bias);
    }
    gates_.push_back(g);
  }
}

Tensor LstmStack::forward(const ParamStore& store, const Tensor& x, Cache* cache) const {
  if (x.rank() != 3 || x.dim(2) != in_ || x.dim(1) == 0) {
    throw std::invalid_argument("lstm: expected input [B, T>=1, " + std::to_string(in_) +
                                "], got " + shape_str(x.shape()));
  }
  const std::size_t batch = x.dim(0), steps = x.dim(1), h = hidden_;
  if (cache) {
    cache->batch = batch;
    cache->steps = steps;
    cache->layers.assign(gates_.size(), {});
  }

  std::vector<Tensor> seq(steps);
  for (std::size_t t = 0; t < steps; ++t) seq[t] = slice_step(x, t);

  for (std::size_t l = 0; l < gates_.size(); ++l) {
    const auto& gp = gates_[l];
    const std::size_t d = seq[0].dim(1);
    Tensor hs({batch, h});
    Tensor cs({batch, h});
    std::vector<Tensor> out(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      std::array<Tensor, 4> pre;
      for (std::size_t k = 0; k < 4; ++k) {
        pre[k] = Tensor({batch, h});
        gemm(false, false, batch, h, d, seq[t].ptr(), store.value(gp[k].w).ptr(), pre[k].ptr(),
             false);
        gemm(false, false, batch, h, h, hs.ptr(), store.value(gp[k].u).ptr(), pre[k].ptr(),
             true);
        const Tensor& bias = store.value(gp[k].b);
        double* p = pre[k].ptr();
        for (std::size_t r = 0; r < batch; ++r)
          for (std::size_t j = 0; j < h; ++j) p[r * h + j] += bias[j];
      }
      Tensor ig = act::sigmoid(pre[gate_i]);
      Tensor fg = act::sigmoid(pre[gate_f]);
      Tensor og = act::sigmoid(pre[gate_o]);
      Tensor gg = act::tanh(pre[gate_c]);
      Tensor c_new({batch, h});
      Tensor tc({batch, h});
      Tensor h_new({batch, h});
      for (std::size_t e = 0; e < batch * h; ++e) {
        c_new[e] = fg[e] * cs[e] + ig[e] * gg[e];
        tc[e] = std::tanh(c_new[e]);
        h_new[e] = og[e] * tc[e];
      }
      if (cache) {
        cache->layers[l].push_back(StepCache{seq[t], hs, cs, std::move(ig), std::move(fg),
                                             std::move(og), std::move(gg), tc});
      }
      hs = h_new;
      cs = std::move(c_new);
      out[t] = std::move(h_new);
    }
    seq = std::move(out);
  }

  Tensor y({batch, steps, h});
  for (std::size_t t = 0; t < steps; ++t) store_step(y, t, seq[t]);
  return y;
}

Tensor LstmStack::backward(ParamStore& store, Cache&& cache, const Tensor& dy) const {
  const std::size_t batch = cache.batch, steps = cache.steps, h = hidden_;
  require_shape(dy, {batch, steps, h}, "lstm backward upstream");
  if (cache.layers.size() != gates_.size()) {
    throw std::logic_error("lstm backward: cache does not come from this stack");
  }

  std::vector<Tensor> d_seq(steps);
  for (std::size_t t = 0; t < steps; ++t) d_seq[t] = slice_step(dy, t);

  for (std::size_t li = gates_.size(); li-- > 0;) {
    const auto& gp = gates_[li];
    auto& steps_cache = cache.layers[li];
    const std::size_t d = steps_cache[0].x.dim(1);
    Tensor dh_next({batch, h});
    Tensor dc_next({batch, h});
    std::vector<Tensor> d_in(steps);
    for (std::size_t t = steps; t-- > 0;) {
      StepCache& sc = steps_cache[t];
      std::array<Tensor, 4> dpre;
      for (auto& g : dpre) g = Tensor({batch, h});
      Tensor dc({batch, h});
      for (std::size_t e = 0; e < batch * h; ++e) {
        const double dh = d_seq[t][e] + dh_next[e];
        const double o = sc.o[e], tc = sc.tanh_c[e], i = sc.i[e], f = sc.f[e], g = sc.g[e];
        dpre[gate_o][e] = dh * tc * o * (1.0 - o);
        const double dce = dh * o * (1.0 - tc * tc) + dc_next[e];
        dpre[gate_i][e] = dce * g * i * (1.0 - i);
        dpre[gate_f][e] = dce * sc.c_prev[e] * f * (1.0 - f);
        dpre[gate_c][e] = dce * i * (1.0 - g * g);
        dc[e] = dce * f;
      }
      dc_next = std::move(dc);
      Tensor dx({batch, d});
      Tensor dh_prev({batch, h});
      for (std::size_t k = 0; k < 4; ++k) {
        gemm(true, false, d, h, batch, sc.x.ptr(), dpre[k].ptr(), store.grad(gp[k].w).ptr(),
             true);
        gemm(true, false, h, h, batch, sc.h_prev.ptr(), dpre[k].ptr(),
             store.grad(gp[k].u).ptr(), true);
        add_column_sums(dpre[k], store.grad(gp[k].b));
        gemm(false, true, batch, d, h, dpre[k].ptr(), store.value(gp[k].w).ptr(), dx.ptr(),
             true);
        gemm(false, true, batch, h, h, dpre[k].ptr(), store.value(gp[k].u).ptr(),
             dh_prev.ptr(), true);
      }
      dh_next = std::move(dh_prev);
      d_in[t] = std::move(dx);
    }
    steps_cache.clear();
    d_seq = std::move(d_in);
  }

  Tensor dx({batch, steps, in_});
  for (std::size_t t = 0; t < steps; ++t) store_step(dx, t, d_seq[t]);
  cache.layers.clear();
  return dx;
}

}  // namespace rulnet
