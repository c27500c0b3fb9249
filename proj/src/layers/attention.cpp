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

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rulnet/error.hpp"
#include "rulnet/layers.hpp"

namespace rulnet {

MultiheadAttention::MultiheadAttention(ParamStore& store, const std::string& prefix,
                                       std::size_t dim, std::size_t heads, std::uint64_t seed)
    : dim_(dim), heads_(heads) {
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError("attention: heads (" + std::to_string(heads) +
                      ") must divide the model dimension (" + std::to_string(dim) + ")");
  }
  auto add = [&](const char* n) {
    const std::string name = prefix + "." + n;
    return store.add(name, uniform_init({dim, dim}, dim, seed, name), ParamKind::weight);
  };
  wq_ = add("W_Q");
  wk_ = add("W_K");
  wv_ = add("W_V");
  wo_ = add("W_O");
}

Tensor MultiheadAttention::forward(const ParamStore& store, const Tensor& x,
                                   Cache* cache) const {
  if (x.rank() != 3 || x.dim(2) != dim_) {
    throw std::invalid_argument("attention: expected input [B, T, " + std::to_string(dim_) +
                                "], got " + shape_str(x.shape()));
  }
  const std::size_t batch = x.dim(0), steps = x.dim(1), dk = dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  Tensor q = matmul(x, store.value(wq_));
  Tensor k = matmul(x, store.value(wk_));
  Tensor v = matmul(x, store.value(wv_));
  Tensor weights({batch, heads_, steps, steps});
  Tensor concat({batch, steps, dim_});

  std::vector<double> row(steps);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t hh = 0; hh < heads_; ++hh) {
      const std::size_t off = hh * dk;
      double* a = weights.ptr() + ((b * heads_ + hh) * steps) * steps;
      for (std::size_t i = 0; i < steps; ++i) {
        const double* qi = q.ptr() + (b * steps + i) * dim_ + off;
        double mx = -INFINITY;
        for (std::size_t j = 0; j < steps; ++j) {
          const double* kj = k.ptr() + (b * steps + j) * dim_ + off;
          double s = 0.0;
          for (std::size_t c = 0; c < dk; ++c) s += qi[c] * kj[c];
          row[j] = s * scale;
          mx = std::max(mx, row[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < steps; ++j) {
          row[j] = std::exp(row[j] - mx);
          z += row[j];
        }
        double* out = concat.ptr() + (b * steps + i) * dim_ + off;
        for (std::size_t j = 0; j < steps; ++j) {
          const double w = row[j] / z;
          a[i * steps + j] = w;
          const double* vj = v.ptr() + (b * steps + j) * dim_ + off;
          for (std::size_t c = 0; c < dk; ++c) out[c] += w * vj[c];
        }
      }
    }
  }

  Tensor y = matmul(concat, store.value(wo_));
  if (cache) {
    cache->x = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->weights = std::move(weights);
    cache->concat = std::move(concat);
  }
  return y;
}

Tensor MultiheadAttention::backward(ParamStore& store, Cache&& cache, const Tensor& dy) const {
  require_shape(dy, cache.x.shape(), "attention backward upstream");
  const std::size_t batch = cache.x.dim(0), steps = cache.x.dim(1), dk = dim_ / heads_;
  const std::size_t rows = batch * steps;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  gemm(true, false, dim_, dim_, rows, cache.concat.ptr(), dy.ptr(), store.grad(wo_).ptr(), true);
  Tensor dconcat(cache.x.shape());
  gemm(false, true, rows, dim_, dim_, dy.ptr(), store.value(wo_).ptr(), dconcat.ptr(), false);

  Tensor dq(cache.x.shape()), dk_t(cache.x.shape()), dv(cache.x.shape());
  std::vector<double> da(steps * steps);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t hh = 0; hh < heads_; ++hh) {
      const std::size_t off = hh * dk;
      const double* a = cache.weights.ptr() + ((b * heads_ + hh) * steps) * steps;
      for (std::size_t i = 0; i < steps; ++i) {
        const double* go = dconcat.ptr() + (b * steps + i) * dim_ + off;
        for (std::size_t j = 0; j < steps; ++j) {
          const double* vj = cache.v.ptr() + (b * steps + j) * dim_ + off;
          double* dvj = dv.ptr() + (b * steps + j) * dim_ + off;
          double s = 0.0;
          const double w = a[i * steps + j];
          for (std::size_t c = 0; c < dk; ++c) {
            s += go[c] * vj[c];
            dvj[c] += w * go[c];
          }
          da[i * steps + j] = s;
        }
        double dot = 0.0;
        for (std::size_t j = 0; j < steps; ++j) dot += a[i * steps + j] * da[i * steps + j];
        const double* qi = cache.q.ptr() + (b * steps + i) * dim_ + off;
        double* dqi = dq.ptr() + (b * steps + i) * dim_ + off;
        for (std::size_t j = 0; j < steps; ++j) {
          const double ds = a[i * steps + j] * (da[i * steps + j] - dot) * scale;
          const double* kj = cache.k.ptr() + (b * steps + j) * dim_ + off;
          double* dkj = dk_t.ptr() + (b * steps + j) * dim_ + off;
          for (std::size_t c = 0; c < dk; ++c) {
            dqi[c] += ds * kj[c];
            dkj[c] += ds * qi[c];
          }
        }
      }
    }
  }

  Tensor dx(cache.x.shape());
  const std::pair<const Tensor*, std::size_t> parts[3] = {{&dq, wq_}, {&dk_t, wk_}, {&dv, wv_}};
  for (const auto& [grad_out, w] : parts) {
    gemm(true, false, dim_, dim_, rows, cache.x.ptr(), grad_out->ptr(), store.grad(w).ptr(), true);
    gemm(false, true, rows, dim_, dim_, grad_out->ptr(), store.value(w).ptr(), dx.ptr(), true);
  }
  cache = Cache{};
  return dx;
}

}  // namespace rulnet
