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

// Hand-differentiated layers. Every layer follows the same protocol:
//   forward(store, x, cache*)       -- cache may be null for inference
//   backward(store, cache&&, dy)    -- accumulates parameter gradients into
//                                      the store and returns dL/dx
// A cache is produced by exactly one forward call and consumed by exactly
// one backward call.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rulnet/param_store.hpp"
#include "rulnet/rng.hpp"
#include "rulnet/tensor.hpp"

namespace rulnet {

enum class Mode { train, eval };

// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), stream keyed by parameter name.
Tensor uniform_init(const Shape& shape, std::size_t fan_in, std::uint64_t seed,
                    const std::string& name);

// ---------------------------------------------------------------- linear

struct LinearGrads {
  Tensor dx;
  Tensor dw;
  Tensor db;
};

// y = x W + b over the trailing axis of x.
Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b);
LinearGrads linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy);

class Linear {
 public:
  struct Cache {
    Tensor x;
  };

  Linear() = default;
  Linear(ParamStore& store, const std::string& prefix, std::size_t in_dim,
         std::size_t out_dim, std::uint64_t seed);

  Tensor forward(const ParamStore& store, const Tensor& x, Cache* cache) const;
  Tensor backward(ParamStore& store, Cache&& cache, const Tensor& dy) const;

  std::size_t in_dim() const { return in_; }
  std::size_t out_dim() const { return out_; }
  std::size_t weight_index() const { return w_; }
  std::size_t bias_index() const { return b_; }

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  std::size_t w_ = 0;
  std::size_t b_ = 0;
};

// ----------------------------------------------------------- activations

namespace act {

Tensor relu(const Tensor& x);
// Uses the pre-activation input; the derivative at 0 is taken as 0.
Tensor relu_backward(const Tensor& x, const Tensor& dy);

double sigmoid(double x);
Tensor sigmoid(const Tensor& x);
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);

Tensor tanh(const Tensor& x);
Tensor tanh_backward(const Tensor& y, const Tensor& dy);

}  // namespace act

// ------------------------------------------------------------ LSTM stack

// Gate order everywhere: input, forget, output, candidate.
enum Gate : std::size_t { gate_i = 0, gate_f = 1, gate_o = 2, gate_c = 3 };

class LstmStack {
 public:
  struct GateParams {
    std::size_t w;  // [in, hidden]
    std::size_t u;  // [hidden, hidden]
    std::size_t b;  // [hidden]
  };

  struct StepCache {
    Tensor x, h_prev, c_prev;
    Tensor i, f, o, g;  // post-activation gates
    Tensor tanh_c;
  };

  struct Cache {
    std::size_t batch = 0;
    std::size_t steps = 0;
    std::vector<std::vector<StepCache>> layers;
  };

  LstmStack() = default;
  LstmStack(ParamStore& store, const std::string& prefix, std::size_t in_dim,
            std::size_t hidden, std::size_t layers, std::uint64_t seed);

  // x: [B, T, in] -> [B, T, hidden] (top layer hidden sequence), h0 = c0 = 0.
  Tensor forward(const ParamStore& store, const Tensor& x, Cache* cache) const;
  Tensor backward(ParamStore& store, Cache&& cache, const Tensor& dy) const;

  std::size_t layers() const { return gates_.size(); }
  std::size_t hidden() const { return hidden_; }
  const std::array<GateParams, 4>& gates(std::size_t layer) const { return gates_.at(layer); }

 private:
  std::size_t in_ = 0;
  std::size_t hidden_ = 0;
  std::vector<std::array<GateParams, 4>> gates_;
};

// ------------------------------------------------- multihead attention

// Self-attention with Q = x W_Q, K = x W_K, V = x W_V (no biases, no mask),
// per-head softmax(Q K^T / sqrt(d_k)) V, heads concatenated through W_O.
class MultiheadAttention {
 public:
  struct Cache {
    Tensor x;
    Tensor q, k, v;   // [B, T, D]
    Tensor weights;   // [B, H, T, T] softmax rows
    Tensor concat;    // [B, T, D]
  };

  MultiheadAttention() = default;
  MultiheadAttention(ParamStore& store, const std::string& prefix, std::size_t dim,
                     std::size_t heads, std::uint64_t seed);

  Tensor forward(const ParamStore& store, const Tensor& x, Cache* cache) const;
  Tensor backward(ParamStore& store, Cache&& cache, const Tensor& dy) const;

  std::size_t dim() const { return dim_; }
  std::size_t heads() const { return heads_; }
  std::size_t wq() const { return wq_; }
  std::size_t wk() const { return wk_; }
  std::size_t wv() const { return wv_; }
  std::size_t wo() const { return wo_; }

 private:
  std::size_t dim_ = 0;
  std::size_t heads_ = 1;
  std::size_t wq_ = 0, wk_ = 0, wv_ = 0, wo_ = 0;
};

// ------------------------------------------------------------ NODE block

// dh/dt = h W_f + b_f integrated from t0 to t1 with fixed-step classical
// RK4. Backward differentiates the unrolled stages.
class NodeBlock {
 public:
  struct Cache {
    std::vector<std::array<Tensor, 4>> stage_inputs;
  };

  NodeBlock() = default;
  NodeBlock(ParamStore& store, const std::string& prefix, std::size_t dim, std::size_t steps,
            std::uint64_t seed, double t0 = 0.0, double t1 = 1.0);

  Tensor forward(const ParamStore& store, const Tensor& h0, Cache* cache) const;
  Tensor backward(ParamStore& store, Cache&& cache, const Tensor& dy) const;

  std::size_t steps() const { return steps_; }
  std::size_t weight_index() const { return w_; }
  std::size_t bias_index() const { return b_; }

 private:
  std::size_t dim_ = 0;
  std::size_t steps_ = 1;
  double t0_ = 0.0;
  double t1_ = 1.0;
  std::size_t w_ = 0;
  std::size_t b_ = 0;
};

// ----------------------------------------------------- batch norm (1-D)

// Running-statistic update produced by a train-mode batch-norm forward.
// Forward passes never mutate the store; the caller commits updates.
struct RunningStatUpdate {
  std::size_t mean_index = 0;
  std::size_t var_index = 0;
  double momentum = 0.1;
  std::vector<double> batch_mean;
  std::vector<double> batch_var;  // unbiased
};

void apply_running_stat_updates(ParamStore& store, const std::vector<RunningStatUpdate>& updates);

class BatchNorm1d {
 public:
  struct Cache {
    Tensor xhat;
    std::vector<double> inv_std;
    bool batch_stats = false;
  };

  BatchNorm1d() = default;
  BatchNorm1d(ParamStore& store, const std::string& prefix, std::size_t dim,
              double momentum = 0.1, double eps = 1e-5);

  // Normalizes with batch statistics (B >= 2); appends the running-stat
  // update to `updates` when non-null.
  Tensor forward_train(const ParamStore& store, const Tensor& x, Cache* cache,
                       std::vector<RunningStatUpdate>* updates) const;
  // Normalizes with the running statistics.
  Tensor forward_eval(const ParamStore& store, const Tensor& x, Cache* cache) const;
  // Handles both modes: the cache records which statistics were used.
  Tensor backward(ParamStore& store, Cache&& cache, const Tensor& dy) const;

  std::size_t gamma_index() const { return gamma_; }
  std::size_t beta_index() const { return beta_; }
  std::size_t running_mean_index() const { return mean_; }
  std::size_t running_var_index() const { return var_; }

 private:
  Tensor backward_train(ParamStore& store, const Cache& cache, const Tensor& dy) const;

  std::size_t dim_ = 0;
  double momentum_ = 0.1;
  double eps_ = 1e-5;
  std::size_t gamma_ = 0, beta_ = 0, mean_ = 0, var_ = 0;
};

// ---------------------------------------------------------------- dropout

struct DropoutCache {
  std::vector<double> scale;  // empty means identity
};

// Inverted dropout. Identity in eval mode or when rate == 0.
Tensor dropout(const Tensor& x, double rate, Mode mode, CounterRng& rng, DropoutCache* cache);
Tensor dropout_backward(DropoutCache&& cache, const Tensor& dy);

}  // namespace rulnet
