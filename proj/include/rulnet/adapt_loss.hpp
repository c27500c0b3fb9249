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

#include "rulnet/model.hpp"
#include "rulnet/tensor.hpp"

namespace rulnet {

struct MseResult {
  double value = 0.0;
  Tensor grad;  // d value / d pred
};

// (1/u) sum (pred - label)^2 over u rows.
MseResult mse_loss(const Tensor& pred, const Tensor& label);

// Gaussian kernel bandwidth. `median` uses the median pairwise Euclidean
// distance of the joint batch (1 when that median is 0) and treats it as a
// constant in backward.
struct Bandwidth {
  enum class Policy { median, fixed };
  Policy policy = Policy::median;
  double sigma = 1.0;

  static Bandwidth median_heuristic() { return {}; }
  static Bandwidth fixed(double sigma) { return {Policy::fixed, sigma}; }
};

double median_pairwise_distance(const Tensor& fs, const Tensor& ft);

struct MmdResult {
  double value = 0.0;
  double sigma = 0.0;
  Tensor grad_s;  // [n, d]
  Tensor grad_t;  // [m, d]
};

// Biased estimator with self-pairs:
//   1/n^2 sum k(s_i,s_j) + 1/m^2 sum k(t_i,t_j) - 2/(nm) sum k(s_i,t_j)
// with k(x,y) = exp(-|x-y|^2 / (2 sigma^2)).
MmdResult mmd_loss(const Tensor& fs, const Tensor& ft, const Bandwidth& bandwidth = {},
                   bool with_grad = true);

// 2 / (1 + exp(-10 epoch/epochs)) - 1
double lambda_schedule(double epoch, double epochs);

struct LossBreakdown {
  double mse_source = 0.0;
  double mse_target = 0.0;
  double mmd = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

struct Batch {
  Tensor x;  // [B, T, F] scaled
  Tensor y;  // [B, 1] scaled
};

enum class Objective {
  hybridonet,  // target stream only, prediction theta_T * head_T
  adapt,       // both streams, both heads, MMD on the extracted features
};

// Forward and backward for one paired step. Gradients are accumulated into
// model.params(); running-statistic updates are appended to
// ctx.stat_updates. `source` may be null, in which case the source MSE and
// MMD terms are absent (0). Source rows use dropout pass 0, target rows
// pass 1.
LossBreakdown total_loss(HybridoModel& model, const Batch* source, const Batch& target,
                         double lambda, const ForwardContext& ctx, Objective objective,
                         const Bandwidth& bandwidth = {});

}  // namespace rulnet
