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

#include "rulnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "rulnet/rng.hpp"

namespace rulnet {

namespace {

double projected(const Tensor& y, const Tensor& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += r[i] * y[i];
  return s;
}

}  // namespace

GradCheckReport gradient_check(ParamStore& store, const Tensor& x, const GradCheckProblem& op,
                               const GradCheckOptions& options) {
  GradCheckReport report;
  Tensor input = x;

  const Tensor y0 = op.forward(store, input);
  Tensor r(y0.shape());
  CounterRng rng(options.seed, stream_id("gradcheck.projection"));
  for (auto& v : r.data()) v = rng.uniform(0.5, 1.5);

  store.zero_grad();
  const Tensor dx = op.backward(store, input, r);

  auto loss = [&]() { return projected(op.forward(store, input), r); };
  auto record = [&](double analytic, double numeric, const std::string& where) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), options.floor});
    const double rel = std::abs(analytic - numeric) / denom;
    ++report.checked;
    if (rel > report.max_rel_error || report.worst.empty()) {
      report.max_rel_error = rel;
      report.worst = where;
    }
  };
  auto central = [&](double& slot) {
    const double saved = slot;
    slot = saved + options.step;
    const double lp = loss();
    slot = saved - options.step;
    const double lm = loss();
    slot = saved;
    return (lp - lm) / (2.0 * options.step);
  };

  for (std::size_t p = 0; p < store.size(); ++p) {
    if (!store[p].trainable()) continue;
    // Analytic gradients were computed above; copy before perturbing.
    const Tensor analytic = store.grad(p);
    for (std::size_t i = 0; i < store.value(p).size(); ++i) {
      const double numeric = central(store.value(p)[i]);
      record(analytic[i], numeric, store[p].name + "[" + std::to_string(i) + "]");
    }
  }
  if (options.check_input) {
    for (std::size_t i = 0; i < input.size(); ++i) {
      const double numeric = central(input[i]);
      record(dx[i], numeric, "input[" + std::to_string(i) + "]");
    }
  }
  report.passed = report.max_rel_error <= options.tolerance;
  return report;
}

}  // namespace rulnet
