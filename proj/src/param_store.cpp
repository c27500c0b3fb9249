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

#include "rulnet/param_store.hpp"

#include <stdexcept>

namespace rulnet {

const char* to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::weight: return "weight";
    case ParamKind::bias: return "bias";
    case ParamKind::norm_scale: return "norm_scale";
    case ParamKind::norm_shift: return "norm_shift";
    case ParamKind::scalar: return "scalar";
    case ParamKind::buffer: return "buffer";
  }
  return "weight";
}

ParamKind param_kind_from_string(std::string_view s) {
  for (auto k : {ParamKind::weight, ParamKind::bias, ParamKind::norm_scale,
                 ParamKind::norm_shift, ParamKind::scalar, ParamKind::buffer}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown parameter kind '" + std::string(s) + "'");
}

std::size_t ParamStore::add(std::string name, Tensor init, ParamKind kind) {
  if (by_name_.contains(name)) {
    throw std::invalid_argument("duplicate parameter name '" + name + "'");
  }
  const std::size_t idx = params_.size();
  by_name_.emplace(name, idx);
  Tensor grad = Tensor::zeros_like(init);
  params_.push_back(Parameter{std::move(name), kind, std::move(init), std::move(grad), false});
  return idx;
}

std::size_t ParamStore::index(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) {
    throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  }
  return it->second;
}

bool ParamStore::contains(std::string_view name) const {
  return by_name_.contains(std::string(name));
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

std::size_t ParamStore::scalar_count(bool include_buffers) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.kind == ParamKind::buffer && !include_buffers) continue;
    n += p.value.size();
  }
  return n;
}

std::vector<ManifestEntry> ParamStore::manifest() const {
  std::vector<ManifestEntry> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back({p.name, p.value.shape(), p.kind});
  return out;
}

}  // namespace rulnet
