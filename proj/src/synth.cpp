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

#include <cmath>
#include <cstdio>

#include "rulnet/cycle_data.hpp"
#include "rulnet/error.hpp"
#include "rulnet/rng.hpp"

namespace rulnet {

namespace {

constexpr double kVoltageStart = 3.3;
constexpr double kVoltageEnd = 2.0;
constexpr double kDischargeCurrent = -4.4;

// Uniform in [-1, 1] at a fixed (stream, index) coordinate.
double symmetric(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  CounterRng rng(seed, stream, index);
  return rng.uniform(-1.0, 1.0);
}

}  // namespace

void SynthParams::validate() const {
  if (cycle_life_target < 60) throw ConfigError("synth: cycle_life_target must be >= 60");
  if (!(nominal_capacity_ah > 0.0)) throw ConfigError("synth: nominal capacity must be > 0");
  if (!(knee >= 1.0)) throw ConfigError("synth: knee sharpness must be >= 1");
  if (!(noise >= 0.0)) throw ConfigError("synth: noise level must be >= 0");
  if (samples_per_cycle < 8) throw ConfigError("synth: samples_per_cycle must be >= 8");
  if (!(spike_rate >= 0.0 && spike_rate <= 1.0)) throw ConfigError("synth: spike_rate in [0,1]");
}

double SynthParams::fade(int cycle) const {
  const double x = static_cast<double>(cycle) / static_cast<double>(cycle_life_target);
  return nominal_capacity_ah * (1.0 - 0.25 * std::pow(x, knee));
}

CellRecord generate_synthetic_cell(std::uint64_t seed, const SynthParams& p, std::string cell_id) {
  p.validate();
  const int total = p.total_cycles();
  const std::size_t m = static_cast<std::size_t>(p.samples_per_cycle);
  const double q0 = p.nominal_capacity_ah;
  const bool noisy = p.noise > 0.0;

  // One stream per signal; index = cycle * m + sample.
  const std::uint64_t s_fade = stream_id("synth.fade");
  const std::uint64_t s_spike = stream_id("synth.spike");
  const std::uint64_t s_streams[3] = {stream_id("synth.voltage"), stream_id("synth.current"),
                                      stream_id("synth.capacity")};

  std::vector<CycleSeries> cycles;
  cycles.reserve(static_cast<std::size_t>(total));
  for (int c = 1; c <= total; ++c) {
    const auto cu = static_cast<std::uint64_t>(c);
    double q = p.fade(c);
    if (noisy) q += p.noise * q0 * symmetric(seed, s_fade, cu);
    const double duration = 3600.0 * q / -kDischargeCurrent;

    CycleSeries cyc;
    cyc.cycle_index = c;
    cyc.time_s.resize(m);
    cyc.voltage_v.resize(m);
    cyc.current_a.resize(m);
    cyc.capacity_ah.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      const double frac = static_cast<double>(k) / static_cast<double>(m - 1);
      cyc.time_s[k] = duration * frac;
      cyc.voltage_v[k] = kVoltageStart + (kVoltageEnd - kVoltageStart) * frac;
      cyc.current_a[k] = kDischargeCurrent;
      cyc.capacity_ah[k] = q * frac;
    }
    if (noisy) {
      std::vector<double>* streams[3] = {&cyc.voltage_v, &cyc.current_a, &cyc.capacity_ah};
      const double scales[3] = {kVoltageStart, -kDischargeCurrent, q0};
      for (int s = 0; s < 3; ++s) {
        auto& v = *streams[s];
        for (std::size_t k = 0; k < m; ++k) {
          v[k] += p.noise * scales[s] * symmetric(seed, s_streams[s], cu * m + k);
        }
        CounterRng spike(seed, s_spike, (cu * 3 + static_cast<std::uint64_t>(s)) * 2);
        if (spike.uniform() < p.spike_rate) v[spike.below(m)] *= p.spike_factor;
      }
    }
    cycles.push_back(std::move(cyc));
  }
  return make_cell(std::move(cell_id), q0, p.dataset, p.protocol, std::move(cycles));
}

std::vector<CellRecord> generate_corpus(std::uint64_t seed, const SynthCorpusParams& params) {
  if (params.life_min < 60 || params.life_max < params.life_min) {
    throw ConfigError("synth: need 60 <= life_min <= life_max");
  }
  std::vector<CellRecord> cells;
  cells.reserve(params.cells);
  const auto span = static_cast<std::uint64_t>(params.life_max - params.life_min + 1);
  for (std::size_t i = 0; i < params.cells; ++i) {
    CounterRng draw(seed, stream_id("synth.corpus.life"), i);
    SynthParams p = params.base;
    p.cycle_life_target = params.life_min + static_cast<int>(draw.below(span));
    char id[64];
    std::snprintf(id, sizeof(id), "%s-%04zu", params.id_prefix.c_str(), i + 1);
    cells.push_back(generate_synthetic_cell(CounterRng::mix(seed ^ CounterRng::mix(i + 1)), p, id));
  }
  return cells;
}

}  // namespace rulnet
