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

#include <json.hpp>

#include "rulnet/model.hpp"

namespace rulnet {

inline constexpr char kCheckpointMagic[] = "HYBRIDONET1";

// Layout: magic, uint64 LE header length, JSON header
// {"config", "manifest": [{"name","shape","kind","frozen"}], "scaler", "meta"},
// then every tensor as little-endian float64 in manifest order.
void save_checkpoint(const HybridoModel& model, const std::filesystem::path& path,
                     const nlohmann::json& meta = nlohmann::json::object());

HybridoModel load_checkpoint(const std::filesystem::path& path);
// Also throws ConfigError when the stored config differs from `expected`.
HybridoModel load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

nlohmann::json read_checkpoint_header(const std::filesystem::path& path);

}  // namespace rulnet
