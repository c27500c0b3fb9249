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

BatchNorm1d::BatchNorm1d(ParamStore& store, const std::string& prefix, std::size_t dim,
                         double momentum, double eps)
    : dim_(dim), momentum_(momentum), eps_(eps) {
  gamma_ = store.add(prefix + ".gamma", Tensor({dim}, 1.0), ParamKind::norm_scale);
  beta_ = store.add(prefix + ".beta", Tensor({dim}), ParamKind::norm_shift);
  mean_ = store.add(prefix + ".running_mean", Tensor({dim}), ParamKind::buffer);
  var_ = store.add(prefix + ".running_var", Tensor({dim}, 1.0), ParamKind::buffer);
}

void apply_running_stat_updates(ParamStore& store, const std::vector<RunningStatUpdate>& updates) {
  for (const auto& u : updates) {
    Tensor& rmean = store.value(u.mean_index);
    Tensor& rvar = store.value(u.var_index);
    for (std::size_t j = 0; j < u.batch_mean.size(); ++j) {
      rmean[j] = (1.0 - u.momentum) * rmean[j] + u.momentum * u.batch_mean[j];
      rvar[j] = (1.0 - u.momentum) * rvar[j] + u.momentum * u.batch_var[j];
    }
  }
}

Tensor BatchNorm1d::forward_train(const ParamStore& store, const Tensor& x, Cache* cache,
                                  std::vector<RunningStatUpdate>* updates) const {
  if (x.rank() != 2 || x.dim(1) != dim_) {
    throw std::invalid_argument("batchnorm: expected [B, " + std::to_string(dim_) + "], got " +
                                shape_str(x.shape()));
  }
  const std::size_t batch = x.dim(0);
  if (batch < 2) {
    throw std::invalid_argument("batchnorm: train mode needs a batch of at least 2");
  }
  const Tensor& gamma = store.value(gamma_);
  const Tensor& beta = store.value(beta_);
  RunningStatUpdate update{mean_, var_, momentum_, std::vector<double>(dim_),
                           std::vector<double>(dim_)};

  Tensor xhat(x.shape());
  Tensor y(x.shape());
  std::vector<double> inv_std(dim_);
  const double n = static_cast<double>(batch);
  for (std::size_t j = 0; j < dim_; ++j) {
    double mean = 0.0;
    for (std::size_t b = 0; b < batch; ++b) mean += x.at(b, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const double d = x.at(b, j) - mean;
      var += d * d;
    }
    var /= n;
    inv_std[j] = 1.0 / std::sqrt(var + eps_);
    for (std::size_t b = 0; b < batch; ++b) {
      xhat.at(b, j) = (x.at(b, j) - mean) * inv_std[j];
      y.at(b, j) = gamma[j] * xhat.at(b, j) + beta[j];
    }
    update.batch_mean[j] = mean;
    update.batch_var[j] = var * n / (n - 1.0);
  }
  if (updates) updates->push_back(std::move(update));
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->batch_stats = true;
  }
  return y;
}

Tensor BatchNorm1d::forward_eval(const ParamStore& store, const Tensor& x, Cache* cache) const {
  if (x.rank() != 2 || x.dim(1) != dim_) {
    throw std::invalid_argument("batchnorm: expected [B, " + std::to_string(dim_) + "], got " +
                                shape_str(x.shape()));
  }
  const std::size_t batch = x.dim(0);
  const Tensor& gamma = store.value(gamma_);
  const Tensor& beta = store.value(beta_);
  const Tensor& rmean = store.value(mean_);
  const Tensor& rvar = store.value(var_);
  Tensor xhat(x.shape());
  Tensor y(x.shape());
  std::vector<double> inv_std(dim_);
  for (std::size_t j = 0; j < dim_; ++j) {
    inv_std[j] = 1.0 / std::sqrt(rvar[j] + eps_);
    for (std::size_t b = 0; b < batch; ++b) {
      xhat.at(b, j) = (x.at(b, j) - rmean[j]) * inv_std[j];
      y.at(b, j) = gamma[j] * xhat.at(b, j) + beta[j];
    }
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->batch_stats = false;
  }
  return y;
}

Tensor BatchNorm1d::backward(ParamStore& store, Cache&& cache, const Tensor& dy) const {
  require_shape(dy, cache.xhat.shape(), "batchnorm backward upstream");
  Tensor dx;
  if (cache.batch_stats) {
    dx = backward_train(store, cache, dy);
  } else {
    const Tensor& gamma = store.value(gamma_);
    Tensor& dgamma = store.grad(gamma_);
    Tensor& dbeta = store.grad(beta_);
    dx = Tensor(dy.shape());
    for (std::size_t b = 0; b < dy.dim(0); ++b) {
      for (std::size_t j = 0; j < dim_; ++j) {
        dgamma[j] += dy.at(b, j) * cache.xhat.at(b, j);
        dbeta[j] += dy.at(b, j);
        dx.at(b, j) = dy.at(b, j) * gamma[j] * cache.inv_std[j];
      }
    }
  }
  cache = Cache{};
  return dx;
}

Tensor BatchNorm1d::backward_train(ParamStore& store, const Cache& cache,
                                   const Tensor& dy) const {
  const std::size_t batch = dy.dim(0);
  const double n = static_cast<double>(batch);
  const Tensor& gamma = store.value(gamma_);
  Tensor& dgamma = store.grad(gamma_);
  Tensor& dbeta = store.grad(beta_);
  Tensor dx(dy.shape());
  for (std::size_t j = 0; j < dim_; ++j) {
    double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const double g = dy.at(b, j);
      dgamma[j] += g * cache.xhat.at(b, j);
      dbeta[j] += g;
      const double dxhat = g * gamma[j];
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * cache.xhat.at(b, j);
    }
    for (std::size_t b = 0; b < batch; ++b) {
      const double dxhat = dy.at(b, j) * gamma[j];
      dx.at(b, j) = cache.inv_std[j] / n *
                    (n * dxhat - sum_dxhat - cache.xhat.at(b, j) * sum_dxhat_xhat);
    }
  }
  return dx;
}

}  // namespace rulnet
