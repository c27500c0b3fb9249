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

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rulnet/tensor.hpp"

namespace rulnet {

// Decides optimizer treatment: only `weight` entries receive weight decay,
// `buffer` entries are state (running statistics) and never trained.
enum class ParamKind { weight, bias, norm_scale, norm_shift, scalar, buffer };

const char* to_string(ParamKind kind);
ParamKind param_kind_from_string(std::string_view s);

struct Parameter {
  std::string name;
  ParamKind kind = ParamKind::weight;
  Tensor value;
  Tensor grad;
  bool frozen = false;

  bool trainable() const { return kind != ParamKind::buffer && !frozen; }
};

struct ManifestEntry {
  std::string name;
  Shape shape;
  ParamKind kind;
  bool operator==(const ManifestEntry&) const = default;
};

// Named parameters in insertion order with parallel gradients. Layers refer
// to entries by index, so copies of a store stay consistent with the layers
// that created it.
class ParamStore {
 public:
  std::size_t add(std::string name, Tensor init, ParamKind kind);

  std::size_t index(std::string_view name) const;
  bool contains(std::string_view name) const;

  Tensor& value(std::size_t i) { return params_[i].value; }
  const Tensor& value(std::size_t i) const { return params_[i].value; }
  Tensor& grad(std::size_t i) { return params_[i].grad; }
  const Tensor& grad(std::size_t i) const { return params_[i].grad; }

  Tensor& value(std::string_view name) { return params_[index(name)].value; }
  const Tensor& value(std::string_view name) const { return params_[index(name)].value; }
  Tensor& grad(std::string_view name) { return params_[index(name)].grad; }

  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }

  std::vector<Parameter>& entries() { return params_; }
  const std::vector<Parameter>& entries() const { return params_; }
  std::size_t size() const { return params_.size(); }

  void zero_grad();
  // Total scalar count; buffers excluded unless requested.
  std::size_t scalar_count(bool include_buffers = false) const;
  std::vector<ManifestEntry> manifest() const;

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

}  // namespace rulnet
