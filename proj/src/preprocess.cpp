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

#include "rulnet/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rulnet/error.hpp"

namespace rulnet {

void PreprocessConfig::validate() const {
  if (kernel == 0 || kernel % 2 == 0) throw ConfigError("median kernel must be odd and positive");
  if (!(eol_threshold > 0.0 && eol_threshold < 1.0)) {
    throw ConfigError("eol_threshold must be in (0, 1)");
  }
  if (window_len == 0 || stride == 0) throw ConfigError("window_len and stride must be positive");
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty sequence");
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

FilterResult median_filter(std::span<const double> signal, std::size_t kernel) {
  if (kernel == 0 || kernel % 2 == 0) {
    throw std::invalid_argument("median_filter: kernel must be odd and positive, got " +
                                std::to_string(kernel));
  }
  FilterResult out;
  const std::size_t n = signal.size();
  if (n == 0) return out;
  if (kernel > n) {
    out.values.assign(n, median_of({signal.begin(), signal.end()}));
    out.kernel_exceeds_length = true;
    return out;
  }
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(kernel / 2);
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  std::vector<double> window(kernel);
  out.values.resize(n);
  for (std::ptrdiff_t i = 0; i <= last; ++i) {
    for (std::ptrdiff_t k = -half; k <= half; ++k) {
      const std::ptrdiff_t j = std::clamp(i + k, std::ptrdiff_t{0}, last);
      window[static_cast<std::size_t>(k + half)] = signal[static_cast<std::size_t>(j)];
    }
    std::nth_element(window.begin(), window.begin() + half, window.end());
    out.values[static_cast<std::size_t>(i)] = window[static_cast<std::size_t>(half)];
  }
  return out;
}

std::array<double, kStats> channel_statistics(std::span<const double> values) {
  if (values.empty()) throw DataError("feature extraction: empty channel");
  const double n = static_cast<double>(values.size());
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // Offsetting by the minimum keeps constant channels exact.
  double offset = 0.0;
  for (double v : values) offset += v - lo;
  const double mean = std::clamp(lo + offset / n, lo, hi);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = ss / n;
  std::array<double, kStats> s{};
  s[st_mean] = mean;
  s[st_std] = std::sqrt(var);
  s[st_min] = lo;
  s[st_max] = hi;
  s[st_var] = var;
  s[st_med] = median_of({values.begin(), values.end()});
  return s;
}

FeatureMatrix extract_features(const CycleSeries& cycle, std::size_t kernel) {
  const std::vector<double>* channels[kChannels] = {&cycle.current_a, &cycle.voltage_v,
                                                    &cycle.capacity_ah};
  FeatureMatrix m{};
  for (std::size_t ch = 0; ch < kChannels; ++ch) {
    if (channels[ch]->empty()) {
      throw DataError("cycle " + std::to_string(cycle.cycle_index) + ": empty channel");
    }
    if (kernel == 1) {
      m[ch] = channel_statistics(*channels[ch]);
    } else {
      m[ch] = channel_statistics(median_filter(*channels[ch], kernel).values);
    }
  }
  return m;
}

WindowBuild build_sample_windows(const CellRecord& cell, const LifeLabel& life,
                                 const PreprocessConfig& config) {
  config.validate();
  WindowBuild out;
  const int first_anchor = config.min_anchor();
  if (life.cycle_life < first_anchor) {
    out.too_short = true;
    return out;
  }
  if (static_cast<std::size_t>(life.cycle_life) > cell.cycles.size()) {
    throw DataError(cell.cell_id + ": cycle_life exceeds recorded cycles");
  }
  std::vector<FeatureMatrix> per_cycle(static_cast<std::size_t>(life.cycle_life));
  // Cycles before the first window's oldest slice are never used.
  const int first_used = first_anchor - static_cast<int>((config.window_len - 1) * config.stride);
  for (int c = first_used; c <= life.cycle_life; ++c) {
    per_cycle[static_cast<std::size_t>(c - 1)] =
        extract_features(cell.cycles[static_cast<std::size_t>(c - 1)], config.kernel);
  }
  out.windows.reserve(static_cast<std::size_t>(life.cycle_life - first_anchor + 1));
  for (int anchor = first_anchor; anchor <= life.cycle_life; ++anchor) {
    SampleWindow w;
    w.anchor_cycle = anchor;
    w.rul_label = life.cycle_life - anchor;
    w.cell_id = cell.cell_id;
    w.features.reserve(config.window_len);
    for (std::size_t s = 0; s < config.window_len; ++s) {
      const int c = anchor - static_cast<int>((config.window_len - 1 - s) * config.stride);
      w.features.push_back(per_cycle[static_cast<std::size_t>(c - 1)]);
    }
    out.windows.push_back(std::move(w));
  }
  return out;
}

WindowBuild build_sample_windows(const CellRecord& cell, const LifeLabel& life,
                                 std::size_t kernel) {
  PreprocessConfig config;
  config.kernel = kernel;
  config.eol_threshold = life.eol_threshold;
  return build_sample_windows(cell, life, config);
}

std::vector<SampleWindow> build_corpus_windows(const std::vector<CellRecord>& cells,
                                               const PreprocessConfig& config) {
  std::vector<SampleWindow> all;
  for (const auto& cell : cells) {
    const LifeLabel life = compute_cycle_life(cell, config.eol_threshold);
    WindowBuild b = build_sample_windows(cell, life, config);
    for (auto& w : b.windows) all.push_back(std::move(w));
  }
  return all;
}

ScalerParams fit_minmax_scaler(std::span<const SampleWindow> samples) {
  if (samples.empty()) throw DataError("fit_minmax_scaler: no samples");
  ScalerParams s;
  s.min.fill(INFINITY);
  s.max.fill(-INFINITY);
  int label_max = 0;
  for (const auto& w : samples) {
    for (const auto& m : w.features) {
      for (std::size_t ch = 0; ch < kChannels; ++ch) {
        for (std::size_t st = 0; st < kStats; ++st) {
          const std::size_t j = ch * kStats + st;
          s.min[j] = std::min(s.min[j], m[ch][st]);
          s.max[j] = std::max(s.max[j], m[ch][st]);
        }
      }
    }
    label_max = std::max(label_max, w.rul_label);
  }
  // A zero label_max would make every scaled label undefined.
  s.label_max = label_max > 0 ? static_cast<double>(label_max) : 1.0;
  return s;
}

SampleWindow transform_features(const SampleWindow& sample, const ScalerParams& scaler) {
  SampleWindow out = sample;
  for (auto& m : out.features) {
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
      for (std::size_t st = 0; st < kStats; ++st) {
        const std::size_t j = ch * kStats + st;
        const double range = scaler.max[j] - scaler.min[j];
        m[ch][st] = range > 0.0 ? (m[ch][st] - scaler.min[j]) / range : 0.0;
      }
    }
  }
  return out;
}

SampleWindow inverse_transform_features(const SampleWindow& sample, const ScalerParams& scaler) {
  SampleWindow out = sample;
  for (auto& m : out.features) {
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
      for (std::size_t st = 0; st < kStats; ++st) {
        const std::size_t j = ch * kStats + st;
        m[ch][st] = scaler.min[j] + m[ch][st] * (scaler.max[j] - scaler.min[j]);
      }
    }
  }
  return out;
}

double scale_label(double rul, const ScalerParams& scaler) {
  return std::clamp(rul / scaler.label_max, 0.0, 1.0);
}

nlohmann::json scaler_to_json(const ScalerParams& scaler) {
  return {{"min", scaler.min}, {"max", scaler.max}, {"label_max", scaler.label_max}};
}

ScalerParams scaler_from_json(const nlohmann::json& j) {
  ScalerParams s;
  try {
    const auto mn = j.at("min").get<std::vector<double>>();
    const auto mx = j.at("max").get<std::vector<double>>();
    if (mn.size() != kFeatures || mx.size() != kFeatures) {
      throw DataError("scaler: min/max must have 18 entries");
    }
    std::copy(mn.begin(), mn.end(), s.min.begin());
    std::copy(mx.begin(), mx.end(), s.max.begin());
    s.label_max = j.at("label_max").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scaler: ") + e.what());
  }
  for (std::size_t i = 0; i < kFeatures; ++i) {
    if (s.max[i] < s.min[i]) throw DataError("scaler: max < min at feature " + std::to_string(i));
  }
  if (!(s.label_max > 0.0)) throw DataError("scaler: label_max must be positive");
  return s;
}

Tensor assemble_feature_tensor(std::span<const SampleWindow> samples) {
  const std::size_t n = samples.size();
  const std::size_t len = n ? samples[0].features.size() : 0;
  Tensor t({n, len, kChannels, kStats});
  std::size_t k = 0;
  for (const auto& w : samples) {
    if (w.features.size() != len) throw DataError("windows of unequal length");
    for (const auto& m : w.features)
      for (const auto& row : m)
        for (double v : row) t[k++] = v;
  }
  return t;
}

ModelInput to_model_input(std::span<const SampleWindow> samples, const ScalerParams& scaler) {
  const std::size_t n = samples.size();
  const std::size_t len = n ? samples[0].features.size() : 0;
  ModelInput in{Tensor({n, len, kFeatures}), Tensor({n, 1})};
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const SampleWindow scaled = transform_features(samples[i], scaler);
    if (scaled.features.size() != len) throw DataError("windows of unequal length");
    for (const auto& m : scaled.features)
      for (const auto& row : m)
        for (double v : row) in.x[k++] = v;
    in.y[i] = scale_label(samples[i].rul_label, scaler);
  }
  return in;
}

}  // namespace rulnet
