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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include <doctest.h>

#include "rulnet/gradcheck.hpp"
#include "rulnet/rng.hpp"
#include "rulnet/tensor.hpp"

namespace rulnet::testing {

inline Tensor random_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(shape);
  CounterRng rng(seed, stream_id("test.tensor"));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Randomizes every non-buffer entry of the store.
inline void randomize(ParamStore& store, std::uint64_t seed, double scale = 0.5) {
  for (std::size_t p = 0; p < store.size(); ++p) {
    if (store[p].kind == ParamKind::buffer) continue;
    CounterRng rng(seed, stream_id(store[p].name));
    for (auto& v : store.value(p).data()) v = rng.uniform(-scale, scale);
  }
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    CounterRng rng(static_cast<std::uint64_t>(
                       std::chrono::steady_clock::now().time_since_epoch().count()),
                   stream_id(tag));
    path_ = std::filesystem::temp_directory_path() /
            ("rulnet-" + tag + "-" + std::to_string(rng.next_u64() % 1000000007ULL));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace rulnet::testing
