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

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rulnet/model.hpp"
#include "rulnet/preprocess.hpp"
#include "rulnet/trainer.hpp"

namespace rulnet {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_numerical = 3 };

// Everything a config file may set. Sections: "model", "train",
// "preprocess", "data" ({"source", "target"}).
struct PipelineConfig {
  ModelConfig model;
  TrainConfig train;
  PreprocessConfig preprocess;
  std::string source_dir;
  std::string target_dir;
};

nlohmann::json to_json(const PreprocessConfig& c);
PreprocessConfig preprocess_config_from_json(const nlohmann::json& j, PreprocessConfig base = {});
nlohmann::json to_json(const PipelineConfig& c);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

// One line per config key: name, default and where the default comes from.
std::string config_key_reference();

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace rulnet
