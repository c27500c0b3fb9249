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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rulnet/layers.hpp"
#include "rulnet/preprocess.hpp"

namespace rulnet {

// Which attention time step seeds the NODE block.
enum class AttentionPick { last, second_to_last, mean };

const char* to_string(AttentionPick pick);
AttentionPick attention_pick_from_string(std::string_view s);

struct ModelConfig {
  std::size_t input_dim = kFeatures;
  std::size_t seq_len = 10;
  std::size_t hidden = 64;
  std::size_t lstm_layers = 2;
  std::size_t heads = 4;
  std::size_t node_steps = 2;
  AttentionPick attention_pick = AttentionPick::second_to_last;
  std::vector<std::size_t> predictor_dims{128, 64, 32, 1};
  double dropout = 0.1;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Per-forward settings. Dropout masks come from a counter stream keyed by
// (seed, layer, step, pass).
struct ForwardContext {
  Mode mode = Mode::eval;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::uint64_t pass = 0;
  std::vector<RunningStatUpdate>* stat_updates = nullptr;
};

// [linear -> ReLU -> batch norm -> dropout] x (dims.size()-1), then
// linear -> sigmoid to a single output.
class PredictorHead {
 public:
  struct Cache {
    std::vector<Linear::Cache> linear;
    std::vector<Tensor> pre_relu;
    std::vector<BatchNorm1d::Cache> norm;
    std::vector<DropoutCache> drop;
    Linear::Cache out;
    Tensor y;
  };

  PredictorHead() = default;
  PredictorHead(ParamStore& store, const std::string& prefix, std::size_t in_dim,
                const std::vector<std::size_t>& dims, double dropout, std::uint64_t seed);

  Tensor forward(const ParamStore& store, const Tensor& x, const ForwardContext& ctx,
                 Cache* cache) const;
  Tensor backward(ParamStore& store, Cache&& cache, const Tensor& dy) const;

 private:
  std::vector<Linear> hidden_;
  std::vector<BatchNorm1d> norm_;
  std::vector<std::uint64_t> drop_streams_;
  Linear out_;
  double dropout_ = 0.0;
};

// LSTM stack -> multihead self-attention -> pick one time step -> NODE.
class FeatureExtractor {
 public:
  struct Cache {
    LstmStack::Cache lstm;
    MultiheadAttention::Cache attn;
    NodeBlock::Cache node;
    std::size_t batch = 0;
    std::size_t steps = 0;
  };

  FeatureExtractor() = default;
  FeatureExtractor(ParamStore& store, const ModelConfig& config, std::uint64_t seed);

  // x: [B, T, input_dim] -> [B, hidden]
  Tensor forward(const ParamStore& store, const Tensor& x, Cache* cache) const;
  Tensor backward(ParamStore& store, Cache&& cache, const Tensor& dy) const;

  const LstmStack& lstm() const { return lstm_; }
  const MultiheadAttention& attention() const { return attn_; }
  const NodeBlock& node() const { return node_; }
  AttentionPick pick() const { return pick_; }

 private:
  LstmStack lstm_;
  MultiheadAttention attn_;
  NodeBlock node_;
  AttentionPick pick_ = AttentionPick::second_to_last;
  std::size_t hidden_ = 0;
};

enum class Heads { source_only, target_only, both };

struct ModelOutput {
  Tensor y_source;  // head_S output [B,1]; empty for target_only
  Tensor y_target;  // theta_S * head_S + theta_T * head_T; empty for source_only
  Tensor head_t;    // head_T output [B,1]; empty for source_only
  Tensor features;  // [B, hidden]
};

struct ModelCache {
  FeatureExtractor::Cache gf;
  PredictorHead::Cache gs;
  PredictorHead::Cache gt;
  Heads heads = Heads::both;
  Tensor head_s;
  Tensor head_t;
};

// Feature extractor G_F, source head G_S, target head G_T and the trade-off
// scalars. Parameters live under gf.*, gs.*, gt.*, theta_s, theta_t.
class HybridoModel {
 public:
  HybridoModel() = default;
  HybridoModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // target_only computes theta_T * head_T and skips head_S entirely; it is
  // the supervised (no adaptation) path where theta_S is held at zero.
  ModelOutput forward(const Tensor& x, const ForwardContext& ctx, Heads heads,
                      ModelCache* cache) const;
  // Any upstream gradient may be null. Accumulates into params() and
  // returns the gradient with respect to the input.
  Tensor backward(ModelCache&& cache, const Tensor* dy_source, const Tensor* dy_target,
                const Tensor* d_features);

  Tensor extract_features(const Tensor& x) const;

  double theta_s() const { return params_.value(theta_s_)[0]; }
  double theta_t() const { return params_.value(theta_t_)[0]; }
  void set_thetas(double theta_s, double theta_t);
  void freeze_thetas(bool frozen);
  std::size_t theta_s_index() const { return theta_s_; }
  std::size_t theta_t_index() const { return theta_t_; }

  const FeatureExtractor& feature_extractor() const { return gf_; }

  std::optional<ScalerParams> scaler;

 private:
  ModelConfig config_;
  ParamStore params_;
  FeatureExtractor gf_;
  PredictorHead gs_;
  PredictorHead gt_;
  std::size_t theta_s_ = 0;
  std::size_t theta_t_ = 0;
};

HybridoModel init_model(const ModelConfig& config, std::uint64_t seed);

// Eval-mode predictions in cycles: y_target * label_max, floored at 0.
std::vector<double> predict_rul(const HybridoModel& model, std::span<const SampleWindow> windows,
                                const ScalerParams& scaler);
// Uses the scaler stored with the model; throws ConfigError when absent.
std::vector<double> predict_rul(const HybridoModel& model, std::span<const SampleWindow> windows);
// Eval-mode forward in chunks of at most `chunk` rows; returns y_target.
Tensor predict_scaled(const HybridoModel& model, const Tensor& x, std::size_t chunk = 512);

// Arithmetic mean of member predictions in cycle units.
struct Ensemble {
  std::vector<HybridoModel> members;
  ScalerParams scaler;

  std::vector<double> predict(std::span<const SampleWindow> windows) const;
};

}  // namespace rulnet
