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

#include "rulnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rulnet/error.hpp"

namespace rulnet {

const char* to_string(AttentionPick pick) {
  switch (pick) {
    case AttentionPick::last: return "last";
    case AttentionPick::second_to_last: return "second_to_last";
    case AttentionPick::mean: return "mean";
  }
  return "?";
}

AttentionPick attention_pick_from_string(std::string_view s) {
  if (s == "last") return AttentionPick::last;
  if (s == "second_to_last") return AttentionPick::second_to_last;
  if (s == "mean") return AttentionPick::mean;
  throw ConfigError("attention_pick must be one of last, second_to_last, mean (got '" +
                    std::string(s) + "')");
}

void ModelConfig::validate() const {
  if (input_dim == 0) throw ConfigError("input_dim must be positive");
  if (seq_len == 0) throw ConfigError("seq_len must be positive");
  if (hidden == 0) throw ConfigError("hidden must be positive");
  if (lstm_layers == 0) throw ConfigError("lstm_layers must be positive");
  if (heads == 0 || hidden % heads != 0) {
    throw ConfigError("heads (" + std::to_string(heads) + ") must divide hidden (" +
                      std::to_string(hidden) + ")");
  }
  if (node_steps == 0) throw ConfigError("node_steps must be >= 1");
  if (predictor_dims.empty() || predictor_dims.back() != 1) {
    throw ConfigError("predictor_dims must end in 1");
  }
  for (auto d : predictor_dims) {
    if (d == 0) throw ConfigError("predictor_dims entries must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"input_dim", c.input_dim},   {"seq_len", c.seq_len},
          {"hidden", c.hidden},         {"lstm_layers", c.lstm_layers},
          {"heads", c.heads},           {"node_steps", c.node_steps},
          {"attention_pick", to_string(c.attention_pick)},
          {"predictor_dims", c.predictor_dims},
          {"dropout", c.dropout}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "input_dim") c.input_dim = value.get<std::size_t>();
      else if (key == "seq_len") c.seq_len = value.get<std::size_t>();
      else if (key == "hidden") c.hidden = value.get<std::size_t>();
      else if (key == "lstm_layers") c.lstm_layers = value.get<std::size_t>();
      else if (key == "heads") c.heads = value.get<std::size_t>();
      else if (key == "node_steps") c.node_steps = value.get<std::size_t>();
      else if (key == "attention_pick") c.attention_pick = attention_pick_from_string(value.get<std::string>());
      else if (key == "predictor_dims") c.predictor_dims = value.get<std::vector<std::size_t>>();
      else if (key == "dropout") c.dropout = value.get<double>();
      else throw ConfigError("unknown model config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

// ------------------------------------------------------------ predictor

PredictorHead::PredictorHead(ParamStore& store, const std::string& prefix, std::size_t in_dim,
                             const std::vector<std::size_t>& dims, double dropout,
                             std::uint64_t seed)
    : dropout_(dropout) {
  std::size_t width = in_dim;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const std::string block = prefix + "." + std::to_string(k);
    hidden_.emplace_back(store, block + ".linear", width, dims[k], seed);
    norm_.emplace_back(store, block + ".bn", dims[k]);
    drop_streams_.push_back(stream_id(block + ".dropout"));
    width = dims[k];
  }
  out_ = Linear(store, prefix + ".out", width, dims.back(), seed);
}

Tensor PredictorHead::forward(const ParamStore& store, const Tensor& x, const ForwardContext& ctx,
                              Cache* cache) const {
  if (cache) *cache = Cache{};
  Tensor h = x;
  for (std::size_t k = 0; k < hidden_.size(); ++k) {
    Linear::Cache lc;
    Tensor z = hidden_[k].forward(store, h, cache ? &lc : nullptr);
    Tensor r = act::relu(z);
    BatchNorm1d::Cache nc;
    Tensor n = ctx.mode == Mode::train
                   ? norm_[k].forward_train(store, r, cache ? &nc : nullptr, ctx.stat_updates)
                   : norm_[k].forward_eval(store, r, cache ? &nc : nullptr);
    CounterRng rng(ctx.seed, drop_streams_[k] ^ CounterRng::mix(ctx.step * 8 + ctx.pass));
    DropoutCache dc;
    h = dropout(n, dropout_, ctx.mode, rng, cache ? &dc : nullptr);
    if (cache) {
      cache->linear.push_back(std::move(lc));
      cache->pre_relu.push_back(std::move(z));
      cache->norm.push_back(std::move(nc));
      cache->drop.push_back(std::move(dc));
    }
  }
  Tensor y = act::sigmoid(out_.forward(store, h, cache ? &cache->out : nullptr));
  if (cache) cache->y = y;
  return y;
}

Tensor PredictorHead::backward(ParamStore& store, Cache&& cache, const Tensor& dy) const {
  Tensor d = out_.backward(store, std::move(cache.out), act::sigmoid_backward(cache.y, dy));
  for (std::size_t k = hidden_.size(); k-- > 0;) {
    d = dropout_backward(std::move(cache.drop[k]), d);
    d = norm_[k].backward(store, std::move(cache.norm[k]), d);
    d = act::relu_backward(cache.pre_relu[k], d);
    d = hidden_[k].backward(store, std::move(cache.linear[k]), d);
  }
  return d;
}

// ----------------------------------------------------- feature extractor

FeatureExtractor::FeatureExtractor(ParamStore& store, const ModelConfig& config,
                                   std::uint64_t seed)
    : lstm_(store, "gf.lstm", config.input_dim, config.hidden, config.lstm_layers, seed),
      attn_(store, "gf.attn", config.hidden, config.heads, seed),
      node_(store, "gf.node", config.hidden, config.node_steps, seed),
      pick_(config.attention_pick),
      hidden_(config.hidden) {}

namespace {

std::size_t pick_index(AttentionPick pick, std::size_t steps) {
  if (pick == AttentionPick::last) return steps - 1;
  return steps >= 2 ? steps - 2 : 0;
}

}  // namespace

Tensor FeatureExtractor::forward(const ParamStore& store, const Tensor& x, Cache* cache) const {
  if (x.rank() != 3 || x.dim(2) == 0 || x.dim(1) == 0) {
    throw std::invalid_argument("feature extractor: expected [B, T, F] input, got " +
                                shape_str(x.shape()));
  }
  const std::size_t batch = x.dim(0);
  const std::size_t steps = x.dim(1);
  const std::size_t d = hidden_;
  Tensor h = lstm_.forward(store, x, cache ? &cache->lstm : nullptr);
  Tensor a = attn_.forward(store, h, cache ? &cache->attn : nullptr);

  Tensor picked({batch, d});
  if (pick_ == AttentionPick::mean) {
    const double inv = 1.0 / static_cast<double>(steps);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t j = 0; j < d; ++j) picked.at(b, j) += a.at(b, t, j);
      }
      for (std::size_t j = 0; j < d; ++j) picked.at(b, j) *= inv;
    }
  } else {
    const std::size_t t = pick_index(pick_, steps);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t j = 0; j < d; ++j) picked.at(b, j) = a.at(b, t, j);
    }
  }
  if (cache) {
    cache->batch = batch;
    cache->steps = steps;
  }
  return node_.forward(store, picked, cache ? &cache->node : nullptr);
}

Tensor FeatureExtractor::backward(ParamStore& store, Cache&& cache, const Tensor& dy) const {
  const std::size_t batch = cache.batch;
  const std::size_t steps = cache.steps;
  const std::size_t d = hidden_;
  Tensor dp = node_.backward(store, std::move(cache.node), dy);
  Tensor da({batch, steps, d});
  if (pick_ == AttentionPick::mean) {
    const double inv = 1.0 / static_cast<double>(steps);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t j = 0; j < d; ++j) da.at(b, t, j) = dp.at(b, j) * inv;
      }
    }
  } else {
    const std::size_t t = pick_index(pick_, steps);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t j = 0; j < d; ++j) da.at(b, t, j) = dp.at(b, j);
    }
  }
  Tensor dh = attn_.backward(store, std::move(cache.attn), da);
  return lstm_.backward(store, std::move(cache.lstm), dh);
}

// ----------------------------------------------------------------- model

HybridoModel::HybridoModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  gf_ = FeatureExtractor(params_, config_, seed);
  gs_ = PredictorHead(params_, "gs", config_.hidden, config_.predictor_dims, config_.dropout, seed);
  gt_ = PredictorHead(params_, "gt", config_.hidden, config_.predictor_dims, config_.dropout, seed);
  theta_s_ = params_.add("theta_s", Tensor({1}, 0.5), ParamKind::scalar);
  theta_t_ = params_.add("theta_t", Tensor({1}, 0.5), ParamKind::scalar);
}

HybridoModel init_model(const ModelConfig& config, std::uint64_t seed) {
  return HybridoModel(config, seed);
}

void HybridoModel::set_thetas(double theta_s, double theta_t) {
  params_.value(theta_s_)[0] = theta_s;
  params_.value(theta_t_)[0] = theta_t;
}

void HybridoModel::freeze_thetas(bool frozen) {
  params_[theta_s_].frozen = frozen;
  params_[theta_t_].frozen = frozen;
}

ModelOutput HybridoModel::forward(const Tensor& x, const ForwardContext& ctx, Heads heads,
                                  ModelCache* cache) const {
  ModelOutput out;
  if (cache) cache->heads = heads;
  out.features = gf_.forward(params_, x, cache ? &cache->gf : nullptr);
  Tensor hs, ht;
  if (heads != Heads::target_only) {
    hs = gs_.forward(params_, out.features, ctx, cache ? &cache->gs : nullptr);
  }
  if (heads != Heads::source_only) {
    ht = gt_.forward(params_, out.features, ctx, cache ? &cache->gt : nullptr);
  }
  const double ts = theta_s();
  const double tt = theta_t();
  if (heads == Heads::both) {
    out.y_target = Tensor(ht.shape());
    for (std::size_t i = 0; i < ht.size(); ++i) out.y_target[i] = ts * hs[i] + tt * ht[i];
  } else if (heads == Heads::target_only) {
    out.y_target = Tensor(ht.shape());
    for (std::size_t i = 0; i < ht.size(); ++i) out.y_target[i] = tt * ht[i];
  }
  if (heads != Heads::target_only) out.y_source = hs;
  out.head_t = ht;
  if (cache) {
    cache->head_s = std::move(hs);
    cache->head_t = std::move(ht);
  }
  return out;
}

Tensor HybridoModel::backward(ModelCache&& cache, const Tensor* dy_source, const Tensor* dy_target,
                            const Tensor* d_features) {
  const Heads heads = cache.heads;
  if (heads == Heads::source_only && dy_target) {
    throw std::invalid_argument("model backward: target gradient without a target head");
  }
  if (heads == Heads::target_only && dy_source) {
    throw std::invalid_argument("model backward: source gradient without a source head");
  }
  const bool has_s = heads != Heads::target_only;
  const bool has_t = heads != Heads::source_only;
  Tensor dhs, dht;
  if (has_s) dhs = Tensor(cache.head_s.shape());
  if (has_t) dht = Tensor(cache.head_t.shape());

  if (dy_source) dhs += *dy_source;
  if (dy_target) {
    const double ts = theta_s();
    const double tt = theta_t();
    double g_ts = 0.0, g_tt = 0.0;
    for (std::size_t i = 0; i < dy_target->size(); ++i) {
      const double g = (*dy_target)[i];
      if (has_s) {
        g_ts += g * cache.head_s[i];
        dhs[i] += ts * g;
      }
      g_tt += g * cache.head_t[i];
      dht[i] = tt * g;
    }
    if (has_s) params_.grad(theta_s_)[0] += g_ts;
    params_.grad(theta_t_)[0] += g_tt;
  }

  Tensor df;
  if (has_s) df = gs_.backward(params_, std::move(cache.gs), dhs);
  if (has_t) {
    Tensor dft = gt_.backward(params_, std::move(cache.gt), dht);
    if (df.empty()) df = std::move(dft);
    else df += dft;
  }
  if (d_features) df += *d_features;
  return gf_.backward(params_, std::move(cache.gf), df);
}

namespace {

Tensor row_slice(const Tensor& x, std::size_t begin, std::size_t end) {
  Shape shape = x.shape();
  const std::size_t stride = x.size() / shape[0];
  shape[0] = end - begin;
  return Tensor(shape, std::vector<double>(x.vec().begin() + static_cast<long>(begin * stride),
                                           x.vec().begin() + static_cast<long>(end * stride)));
}

template <typename F>
Tensor chunked_rows(const Tensor& x, std::size_t chunk, std::size_t out_cols, F&& fn) {
  const std::size_t n = x.dim(0);
  Tensor out({n, out_cols});
  chunk = std::max<std::size_t>(chunk, 1);
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    const std::size_t end = std::min(n, begin + chunk);
    const Tensor part = fn(row_slice(x, begin, end));
    std::copy(part.vec().begin(), part.vec().end(), out.ptr() + begin * out_cols);
  }
  return out;
}

}  // namespace

Tensor HybridoModel::extract_features(const Tensor& x) const {
  return chunked_rows(x, 512, config_.hidden,
                      [&](const Tensor& part) { return gf_.forward(params_, part, nullptr); });
}

Tensor predict_scaled(const HybridoModel& model, const Tensor& x, std::size_t chunk) {
  const ForwardContext ctx{};
  return chunked_rows(x, chunk, 1, [&](const Tensor& part) {
    return model.forward(part, ctx, Heads::both, nullptr).y_target;
  });
}

std::vector<double> predict_rul(const HybridoModel& model, std::span<const SampleWindow> windows,
                                const ScalerParams& scaler) {
  if (windows.empty()) return {};
  const ModelInput input = to_model_input(windows, scaler);
  const Tensor y = predict_scaled(model, input.x);
  std::vector<double> cycles(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    cycles[i] = std::max(0.0, y[i] * scaler.label_max);
  }
  return cycles;
}

std::vector<double> predict_rul(const HybridoModel& model, std::span<const SampleWindow> windows) {
  if (!model.scaler) throw ConfigError("predict_rul: model has no scaler");
  return predict_rul(model, windows, *model.scaler);
}

std::vector<double> Ensemble::predict(std::span<const SampleWindow> windows) const {
  if (members.empty()) throw ConfigError("ensemble has no members");
  std::vector<double> mean(windows.size(), 0.0);
  for (const auto& m : members) {
    const auto p = predict_rul(m, windows, scaler);
    for (std::size_t i = 0; i < p.size(); ++i) mean[i] += p[i];
  }
  const double inv = 1.0 / static_cast<double>(members.size());
  for (auto& v : mean) v *= inv;
  return mean;
}

}  // namespace rulnet
