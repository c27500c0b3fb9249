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

Tensor uniform_init(const Shape& shape, std::size_t fan_in, std::uint64_t seed,
                    const std::string& name) {
  Tensor t(shape);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  CounterRng rng(seed, stream_id(name));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.rank() != 2 || x.rank() < 1 || x.cols() != w.dim(0)) {
    throw std::invalid_argument("linear: input " + shape_str(x.shape()) +
                                " incompatible with weight " + shape_str(w.shape()));
  }
  if (b.size() != w.dim(1)) {
    throw std::invalid_argument("linear: bias " + shape_str(b.shape()) +
                                " incompatible with weight " + shape_str(w.shape()));
  }
  Tensor y = matmul(x, w);
  const std::size_t n = w.dim(1);
  double* p = y.ptr();
  for (std::size_t r = 0, rows = y.rows(); r < rows; ++r) {
    for (std::size_t j = 0; j < n; ++j) p[r * n + j] += b[j];
  }
  return y;
}

LinearGrads linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy) {
  const std::size_t rows = x.rows();
  const std::size_t in = w.dim(0);
  const std::size_t out = w.dim(1);
  if (dy.rows() != rows || dy.cols() != out) {
    throw std::invalid_argument("linear backward: upstream " + shape_str(dy.shape()) +
                                " does not match output");
  }
  LinearGrads g{Tensor(x.shape()), Tensor(w.shape()), Tensor({out})};
  gemm(false, true, rows, in, out, dy.ptr(), w.ptr(), g.dx.ptr(), false);
  gemm(true, false, in, out, rows, x.ptr(), dy.ptr(), g.dw.ptr(), false);
  add_column_sums(dy, g.db);
  return g;
}

Linear::Linear(ParamStore& store, const std::string& prefix, std::size_t in_dim,
               std::size_t out_dim, std::uint64_t seed)
    : in_(in_dim), out_(out_dim) {
  w_ = store.add(prefix + ".W", uniform_init({in_dim, out_dim}, in_dim, seed, prefix + ".W"),
                 ParamKind::weight);
  b_ = store.add(prefix + ".b", Tensor({out_dim}), ParamKind::bias);
}

Tensor Linear::forward(const ParamStore& store, const Tensor& x, Cache* cache) const {
  Tensor y = linear_forward(x, store.value(w_), store.value(b_));
  if (cache) cache->x = x;
  return y;
}

Tensor Linear::backward(ParamStore& store, Cache&& cache, const Tensor& dy) const {
  LinearGrads g = linear_backward(cache.x, store.value(w_), dy);
  store.grad(w_) += g.dw;
  store.grad(b_) += g.db;
  cache.x = Tensor();
  return std::move(g.dx);
}

}  // namespace rulnet
