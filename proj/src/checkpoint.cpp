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

#include "rulnet/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "rulnet/error.hpp"

namespace rulnet {

namespace {

constexpr std::size_t kMagicLen = sizeof(kCheckpointMagic) - 1;

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

void write_u64(std::ostream& out, std::uint64_t v) {
  v = to_le(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

bool read_u64(std::istream& in, std::uint64_t& v) {
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) return false;
  v = to_le(v);
  return true;
}

struct Opened {
  std::ifstream in;
  nlohmann::json header;
};

Opened open_checkpoint(const std::filesystem::path& path) {
  Opened o;
  o.in.open(path, std::ios::binary);
  if (!o.in) throw DataError(path.string() + ": cannot open checkpoint");
  char magic[kMagicLen];
  if (!o.in.read(magic, kMagicLen) || std::memcmp(magic, kCheckpointMagic, kMagicLen) != 0) {
    throw DataError(path.string() + ": not a checkpoint (magic mismatch)");
  }
  std::uint64_t len = 0;
  if (!read_u64(o.in, len)) throw DataError(path.string() + ": truncated checkpoint header");
  std::string text(len, '\0');
  if (!o.in.read(text.data(), static_cast<std::streamsize>(len))) {
    throw DataError(path.string() + ": truncated checkpoint header");
  }
  try {
    o.header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed checkpoint header: " + e.what());
  }
  return o;
}

}  // namespace

void save_checkpoint(const HybridoModel& model, const std::filesystem::path& path,
                     const nlohmann::json& meta) {
  const ParamStore& store = model.params();
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& p : store.entries()) {
    manifest.push_back({{"name", p.name},
                        {"shape", p.value.shape()},
                        {"kind", to_string(p.kind)},
                        {"frozen", p.frozen}});
  }
  nlohmann::json header = {{"config", to_json(model.config())},
                           {"manifest", std::move(manifest)},
                           {"scaler", model.scaler ? scaler_to_json(*model.scaler) : nullptr},
                           {"meta", meta}};
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot write checkpoint");
  out.write(kCheckpointMagic, kMagicLen);
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : store.entries()) {
    for (double v : p.value.data()) write_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw DataError(path.string() + ": write failed");
}

nlohmann::json read_checkpoint_header(const std::filesystem::path& path) {
  return open_checkpoint(path).header;
}

HybridoModel load_checkpoint(const std::filesystem::path& path) {
  Opened o = open_checkpoint(path);
  const std::string where = path.string() + ": ";
  ModelConfig config;
  try {
    config = model_config_from_json(o.header.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + "checkpoint header lacks a config: " + e.what());
  }
  HybridoModel model(config, 0);
  ParamStore& store = model.params();

  const auto& manifest = o.header.at("manifest");
  if (!manifest.is_array() || manifest.size() != store.size()) {
    throw ConfigError(where + "parameter manifest does not match the stored config");
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& e = manifest[i];
    Parameter& p = store[i];
    if (e.at("name").get<std::string>() != p.name ||
        e.at("shape").get<Shape>() != p.value.shape() ||
        param_kind_from_string(e.at("kind").get<std::string>()) != p.kind) {
      throw ConfigError(where + "manifest entry " + std::to_string(i) + " ('" +
                        e.at("name").get<std::string>() + "') does not match '" + p.name + "' " +
                        shape_str(p.value.shape()));
    }
    p.frozen = e.value("frozen", false);
  }
  for (auto& p : store.entries()) {
    for (auto& v : p.value.data()) {
      std::uint64_t bits = 0;
      if (!read_u64(o.in, bits)) {
        throw DataError(where + "truncated checkpoint: missing data for tensor '" + p.name + "'");
      }
      v = std::bit_cast<double>(bits);
    }
  }
  if (o.in.peek() != std::char_traits<char>::eof()) {
    throw DataError(where + "trailing bytes after the last tensor");
  }
  const auto& scaler = o.header.at("scaler");
  if (!scaler.is_null()) model.scaler = scaler_from_json(scaler);
  return model;
}

HybridoModel load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  const nlohmann::json header = read_checkpoint_header(path);
  const ModelConfig stored = model_config_from_json(header.at("config"));
  if (!(stored == expected)) {
    throw ConfigError(path.string() + ": checkpoint config " + to_json(stored).dump() +
                      " is incompatible with " + to_json(expected).dump());
  }
  return load_checkpoint(path);
}

}  // namespace rulnet
