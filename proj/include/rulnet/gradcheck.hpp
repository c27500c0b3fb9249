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

#include <cstdint>
#include <functional>
#include <string>

#include "rulnet/param_store.hpp"
#include "rulnet/tensor.hpp"

namespace rulnet {

// An operation under test. `forward` must be a pure function of (store
// values, x) for finite differences to be meaningful; `backward` runs the
// forward pass again, back-propagates `dy`, accumulates parameter
// gradients into the store and returns dL/dx.
struct GradCheckProblem {
  std::function<Tensor(ParamStore&, const Tensor& x)> forward;
  std::function<Tensor(ParamStore&, const Tensor& x, const Tensor& dy)> backward;
};

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
  double floor = 1e-3;
  bool check_input = true;
  std::uint64_t seed = 0;  // for the projection weights of the test loss
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst;  // "<param>[i]" or "input[i]"
  std::size_t checked = 0;
  bool passed = false;
};

// Central differences on every trainable parameter element and every input
// element. The scalar test loss is sum_i r_i * y_i with fixed random r in
// [0.5, 1.5], which keeps sum-invariant ops (batch norm, softmax) testable.
GradCheckReport gradient_check(ParamStore& store, const Tensor& x, const GradCheckProblem& op,
                               const GradCheckOptions& options = {});

}  // namespace rulnet
