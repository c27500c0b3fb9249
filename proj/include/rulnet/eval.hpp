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

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rulnet/cycle_data.hpp"
#include "rulnet/model.hpp"
#include "rulnet/preprocess.hpp"

namespace rulnet {

struct Metrics {
  double rmse = 0.0;
  std::optional<double> r2;  // empty when the observed values are constant
  double mape = 0.0;         // percent of cycle life
};

double rmse(std::span<const double> observed, std::span<const double> predicted);

// RMSE, R^2 about the observed mean, and mean |error| / cycle_life * 100.
Metrics compute_metrics(std::span<const double> observed, std::span<const double> predicted,
                        int cycle_life);

// Conventional MAPE: mean |y - yhat| / |y| * 100 over samples with y != 0.
double mape_standard(std::span<const double> observed, std::span<const double> predicted);

struct CellMetrics {
  std::string cell_id;
  std::string protocol;
  int cycle_life = 0;
  double rmse_cycles = 0.0;
  std::optional<double> r2;
  double mape_percent = 0.0;
  std::size_t n_windows = 0;
};

struct TracePoint {
  std::string cell_id;
  int anchor_cycle = 0;
  double observed_rul = 0.0;
  double predicted_rul = 0.0;
  bool operator==(const TracePoint&) const = default;
};

struct SkippedCell {
  std::string cell_id;
  std::string reason;
};

struct EvalReport {
  std::vector<CellMetrics> per_cell;  // sorted by cell_id
  double rmse_cycles = 0.0;           // unweighted means over per_cell
  std::optional<double> r2;           // mean over cells where R^2 is defined
  double mape_percent = 0.0;
  std::vector<TracePoint> traces;
  std::vector<SkippedCell> skipped;
};

using RulPredictor = std::function<std::vector<double>(std::span<const SampleWindow>)>;

EvalReport evaluate_cells(const RulPredictor& predict, const std::vector<CellRecord>& cells,
                          const PreprocessConfig& config);
EvalReport evaluate_cells(const HybridoModel& model, const std::vector<CellRecord>& cells,
                          const ScalerParams& scaler, const PreprocessConfig& config);
EvalReport evaluate_cells(const Ensemble& ensemble, const std::vector<CellRecord>& cells,
                          const PreprocessConfig& config);

nlohmann::json to_json(const EvalReport& report);

// CSV: cell_id,anchor_cycle,observed_rul,predicted_rul
void export_traces(const EvalReport& report, const std::filesystem::path& path);
std::vector<TracePoint> read_traces(const std::filesystem::path& path);

struct DomainWindows {
  std::string domain;  // "source" or "target"
  std::span<const SampleWindow> windows;
  const ScalerParams* scaler = nullptr;
};

// CSV: cell_id,anchor_cycle,domain,f0..f{hidden-1}; eval-mode G_F outputs.
void export_embeddings(const HybridoModel& model, std::span<const DomainWindows> domains,
                       const std::filesystem::path& path);

}  // namespace rulnet
