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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rulnet/adamw.hpp"
#include "rulnet/adapt_loss.hpp"
#include "rulnet/model.hpp"
#include "rulnet/preprocess.hpp"

namespace rulnet {

enum class TrainMode { hybridonet, hybridonet_adapt };
enum class SplitLevel { window, cell };

const char* to_string(TrainMode mode);
TrainMode train_mode_from_string(std::string_view s);  // also accepts "adapt"
const char* to_string(SplitLevel level);
SplitLevel split_level_from_string(std::string_view s);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  AdamWConfig optimizer;
  double val_fraction = 0.1;
  std::size_t runs = 10;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::hybridonet_adapt;
  SplitLevel split = SplitLevel::window;
  Bandwidth bandwidth;
  std::optional<double> lambda_override;  // replaces the schedule when set
  // Adapt mode: pin (theta_S, theta_T) to these values and freeze them.
  std::optional<std::array<double, 2>> fixed_thetas;
  std::size_t threads = 0;                // ensemble workers; 0 = hardware concurrency

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
// Unknown keys throw ConfigError; absent keys keep `base` values.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct Split {
  std::vector<SampleWindow> train;
  std::vector<SampleWindow> val;
};

// Deterministic shuffled split. Window level: round(n * val_fraction)
// windows (at least 1) go to validation. Cell level: whole cells are moved
// to validation in shuffled order until it holds at least that many.
Split split_train_val(std::span<const SampleWindow> samples, double val_fraction,
                      std::uint64_t seed, SplitLevel level = SplitLevel::window);

struct EpochRecord {
  std::size_t run = 0;
  std::size_t epoch = 0;
  std::size_t steps = 0;
  LossBreakdown mean;  // averaged over the epoch's steps; lambda is the epoch value
  double val_rmse = 0.0;
  double seconds = 0.0;
};

struct RunReport {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  std::vector<LossBreakdown> step_losses;
  double best_val_rmse = 0.0;
  std::size_t best_epoch = 0;
  std::string checkpoint_path;
  double wall_seconds = 0.0;
  bool failed = false;
  std::string error;
};

nlohmann::json to_json(const EpochRecord& e);
nlohmann::json to_json(const RunReport& r);
// One JSON object per epoch.
void write_jsonl(const RunReport& report, std::ostream& out);

// Prepared training streams. Each domain carries its own scaler fitted on
// all of that domain's training windows; the model keeps the target one.
struct TrainData {
  std::vector<SampleWindow> source;
  std::vector<SampleWindow> target;
};

struct RunResult {
  RunReport report;
  HybridoModel model;  // best-validation snapshot
};

// One seeded run. hybridonet ignores `data.source`; hybridonet_adapt with an
// empty source stream trains on the target alone.
RunResult train_run(const TrainData& data, const TrainConfig& config, std::uint64_t seed,
                    const ModelConfig& model_config = {}, std::size_t run_index = 0);

struct EnsembleResult {
  std::vector<RunReport> reports;  // by run index, failures included
  Ensemble ensemble;               // surviving members
  nlohmann::json manifest;
};

// Runs seeds config.seed + r for r in [0, runs) on up to config.threads
// workers. When `out_dir` is non-empty, member checkpoints and
// ensemble.json are written there. Throws when every member fails.
EnsembleResult train_ensemble(const TrainData& data, const TrainConfig& config,
                              const ModelConfig& model_config = {},
                              const std::filesystem::path& out_dir = {});

// Reads ensemble.json and its member checkpoints.
Ensemble load_ensemble(const std::filesystem::path& dir);

}  // namespace rulnet
