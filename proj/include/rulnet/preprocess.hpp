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

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rulnet/cycle_data.hpp"
#include "rulnet/tensor.hpp"

namespace rulnet {

inline constexpr std::size_t kChannels = 3;  // current, voltage, capacity
inline constexpr std::size_t kStats = 6;     // mean, std, min, max, var, med
inline constexpr std::size_t kFeatures = kChannels * kStats;

enum Channel : std::size_t { ch_current = 0, ch_voltage = 1, ch_capacity = 2 };
enum Stat : std::size_t { st_mean = 0, st_std = 1, st_min = 2, st_max = 3, st_var = 4, st_med = 5 };

// Rows are channels, columns statistics. Flattened channel-major: the
// feature index of (channel, stat) is channel * 6 + stat.
using FeatureMatrix = std::array<std::array<double, kStats>, kChannels>;

struct PreprocessConfig {
  std::size_t kernel = 5;        // median filter width; 1 disables filtering
  double eol_threshold = 0.8;
  std::size_t window_len = 10;   // cycles per sample
  std::size_t stride = 3;        // spacing between sampled cycles

  // Smallest anchor cycle with a full window (30 for the defaults).
  int min_anchor() const { return static_cast<int>(window_len * stride); }
  void validate() const;
};

struct FilterResult {
  std::vector<double> values;
  bool kernel_exceeds_length = false;
};

// Sliding median with replicate padding. An even kernel throws; a kernel
// longer than the signal yields the constant whole-signal median and sets
// the warning flag.
FilterResult median_filter(std::span<const double> signal, std::size_t kernel);

// Middle order statistic; mean of the two central values for even n.
double median_of(std::vector<double> values);

// (mean, std, min, max, var, med) with population variance.
std::array<double, kStats> channel_statistics(std::span<const double> values);

FeatureMatrix extract_features(const CycleSeries& cycle, std::size_t kernel);

struct SampleWindow {
  std::vector<FeatureMatrix> features;  // window_len slices, oldest first
  int anchor_cycle = 0;
  int rul_label = 0;
  std::string cell_id;
};

struct WindowBuild {
  std::vector<SampleWindow> windows;
  bool too_short = false;  // fewer labeled cycles than one window needs
};

// One window per anchor c in [min_anchor, cycle_life], using cycles
// c - (window_len-1)*stride, ..., c - stride, c.
WindowBuild build_sample_windows(const CellRecord& cell, const LifeLabel& life,
                                 const PreprocessConfig& config);
WindowBuild build_sample_windows(const CellRecord& cell, const LifeLabel& life,
                                 std::size_t kernel);

// Labels every cell and concatenates their windows (cells that are too
// short contribute nothing).
std::vector<SampleWindow> build_corpus_windows(const std::vector<CellRecord>& cells,
                                               const PreprocessConfig& config);

struct ScalerParams {
  std::array<double, kFeatures> min{};
  std::array<double, kFeatures> max{};
  double label_max = 1.0;

  bool operator==(const ScalerParams&) const = default;
};

ScalerParams fit_minmax_scaler(std::span<const SampleWindow> samples);
// (x - min) / (max - min), 0 where max == min; no clipping.
SampleWindow transform_features(const SampleWindow& sample, const ScalerParams& scaler);
SampleWindow inverse_transform_features(const SampleWindow& sample, const ScalerParams& scaler);
// rul / label_max clipped to [0, 1].
double scale_label(double rul, const ScalerParams& scaler);

nlohmann::json scaler_to_json(const ScalerParams& scaler);
ScalerParams scaler_from_json(const nlohmann::json& j);

// Unscaled features as [N, window_len, 3, 6].
Tensor assemble_feature_tensor(std::span<const SampleWindow> samples);

// Model-ready input: scaled features as [N, window_len, 18] and scaled
// labels as [N, 1].
struct ModelInput {
  Tensor x;
  Tensor y;
};
ModelInput to_model_input(std::span<const SampleWindow> samples, const ScalerParams& scaler);

}  // namespace rulnet
