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

#include "rulnet/adapt_loss.hpp"

#include <cmath>
#include <stdexcept>

#include "rulnet/error.hpp"
#include "rulnet/preprocess.hpp"

namespace rulnet {

MseResult mse_loss(const Tensor& pred, const Tensor& label) {
  if (pred.empty()) throw std::invalid_argument("mse_loss: empty batch");
  if (pred.size() != label.size()) {
    throw std::invalid_argument("mse_loss: prediction " + shape_str(pred.shape()) +
                                " vs label " + shape_str(label.shape()));
  }
  const double u = static_cast<double>(pred.size());
  MseResult r;
  r.grad = Tensor(pred.shape());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - label[i];
    sum += e * e;
    r.grad[i] = 2.0 * e / u;
  }
  r.value = sum / u;
  return r;
}

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double e = a[k] - b[k];
    s += e * e;
  }
  return s;
}

// Sum of k(a_i, b_j) and, when requested, the gradient of
// scale * sum wrt a (ga) and b (gb).
double kernel_block(const Tensor& a, const Tensor& b, double inv_two_sigma2, double scale,
                    Tensor* ga, Tensor* gb) {
  const std::size_t n = a.dim(0), m = b.dim(0), d = a.dim(1);
  const double inv_sigma2 = 2.0 * inv_two_sigma2;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.ptr() + i * d;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.ptr() + j * d;
      const double k = std::exp(-sq_dist(ai, bj, d) * inv_two_sigma2);
      sum += k;
      if (ga) {
        const double c = scale * k * inv_sigma2;
        double* gai = ga->ptr() + i * d;
        double* gbj = gb->ptr() + j * d;
        for (std::size_t q = 0; q < d; ++q) {
          const double diff = ai[q] - bj[q];
          gai[q] -= c * diff;
          gbj[q] += c * diff;
        }
      }
    }
  }
  return sum;
}

}  // namespace

double median_pairwise_distance(const Tensor& fs, const Tensor& ft) {
  const std::size_t n = fs.dim(0), m = ft.dim(0), d = fs.dim(1);
  const std::size_t total = n + m;
  auto row = [&](std::size_t i) { return i < n ? fs.ptr() + i * d : ft.ptr() + (i - n) * d; };
  std::vector<double> dist;
  dist.reserve(total * (total - 1) / 2);
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t j = i + 1; j < total; ++j) {
      dist.push_back(std::sqrt(sq_dist(row(i), row(j), d)));
    }
  }
  if (dist.empty()) return 0.0;
  return median_of(std::move(dist));
}

MmdResult mmd_loss(const Tensor& fs, const Tensor& ft, const Bandwidth& bandwidth,
                   bool with_grad) {
  if (fs.rank() != 2 || ft.rank() != 2 || fs.dim(0) == 0 || ft.dim(0) == 0) {
    throw std::invalid_argument("mmd_loss: feature sets must be non-empty [n, d] tensors");
  }
  if (fs.dim(1) != ft.dim(1)) {
    throw std::invalid_argument("mmd_loss: feature widths differ");
  }
  MmdResult r;
  if (bandwidth.policy == Bandwidth::Policy::fixed) {
    if (!(bandwidth.sigma > 0.0)) throw ConfigError("mmd_loss: sigma must be positive");
    r.sigma = bandwidth.sigma;
  } else {
    r.sigma = median_pairwise_distance(fs, ft);
    if (!(r.sigma > 0.0)) r.sigma = 1.0;
  }
  const double inv_two_sigma2 = 1.0 / (2.0 * r.sigma * r.sigma);
  const double n = static_cast<double>(fs.dim(0));
  const double m = static_cast<double>(ft.dim(0));
  const double c_ss = 1.0 / (n * n);
  const double c_tt = 1.0 / (m * m);
  const double c_st = 1.0 / (n * m);

  Tensor* gs = nullptr;
  Tensor* gt = nullptr;
  if (with_grad) {
    r.grad_s = Tensor(fs.shape());
    r.grad_t = Tensor(ft.shape());
    gs = &r.grad_s;
    gt = &r.grad_t;
  }
  const double k_ss = kernel_block(fs, fs, inv_two_sigma2, c_ss, gs, gs) * c_ss;
  const double k_tt = kernel_block(ft, ft, inv_two_sigma2, c_tt, gt, gt) * c_tt;
  const double k_st = kernel_block(fs, ft, inv_two_sigma2, -2.0 * c_st, gs, gt) * c_st;
  r.value = k_ss + k_tt - 2.0 * k_st;
  return r;
}

double lambda_schedule(double epoch, double epochs) {
  if (!(epochs > 0.0)) throw ConfigError("lambda_schedule: epochs must be positive");
  if (!(epoch >= 0.0 && epoch <= epochs)) {
    throw ConfigError("lambda_schedule: epoch must lie in [0, epochs]");
  }
  return 2.0 / (1.0 + std::exp(-10.0 * epoch / epochs)) - 1.0;
}

LossBreakdown total_loss(HybridoModel& model, const Batch* source, const Batch& target,
                         double lambda, const ForwardContext& ctx, Objective objective,
                         const Bandwidth& bandwidth) {
  if (target.x.empty()) throw std::invalid_argument("total_loss: empty target batch");
  if (source && source->x.empty()) throw std::invalid_argument("total_loss: empty source batch");
  if (objective == Objective::hybridonet) source = nullptr;

  LossBreakdown out;
  out.lambda = lambda;

  ModelCache cache_s, cache_t;
  ModelOutput out_s;
  if (source) {
    ForwardContext cs = ctx;
    cs.pass = 0;
    out_s = model.forward(source->x, cs, Heads::source_only, &cache_s);
  }
  ForwardContext ct = ctx;
  ct.pass = 1;
  const Heads target_heads = objective == Objective::adapt ? Heads::both : Heads::target_only;
  ModelOutput out_t = model.forward(target.x, ct, target_heads, &cache_t);

  MseResult mt = mse_loss(out_t.y_target, target.y);
  out.mse_target = mt.value;
  if (source) {
    MseResult ms = mse_loss(out_s.y_source, source->y);
    out.mse_source = ms.value;
    MmdResult mmd = mmd_loss(out_s.features, out_t.features, bandwidth, lambda != 0.0);
    out.mmd = mmd.value;
    Tensor* dfs = nullptr;
    Tensor* dft = nullptr;
    if (lambda != 0.0) {
      mmd.grad_s *= lambda;
      mmd.grad_t *= lambda;
      dfs = &mmd.grad_s;
      dft = &mmd.grad_t;
    }
    model.backward(std::move(cache_s), &ms.grad, nullptr, dfs);
    model.backward(std::move(cache_t), nullptr, &mt.grad, dft);
  } else {
    model.backward(std::move(cache_t), nullptr, &mt.grad, nullptr);
  }
  out.total = out.mse_source + out.mse_target + lambda * out.mmd;
  return out;
}

}  // namespace rulnet
