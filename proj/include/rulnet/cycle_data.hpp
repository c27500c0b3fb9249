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
#include <filesystem>
#include <string>
#include <vector>

namespace rulnet {

// Raw signals of one charge/discharge cycle. All four streams share length.
struct CycleSeries {
  int cycle_index = 1;
  std::vector<double> time_s;
  std::vector<double> voltage_v;
  std::vector<double> current_a;
  std::vector<double> capacity_ah;

  std::size_t size() const { return time_s.size(); }
  bool operator==(const CycleSeries&) const = default;
};

struct CellRecord {
  std::string cell_id;
  double nominal_capacity_ah = 1.1;
  std::string dataset;
  std::string protocol;
  std::vector<CycleSeries> cycles;
  std::vector<double> max_discharge_capacity_ah;  // one per cycle

  bool operator==(const CellRecord&) const = default;
};

struct LifeLabel {
  int cycle_life = 0;
  double eol_threshold = 0.8;
  std::vector<int> rul;  // rul[c - 1] for c = 1..cycle_life
};

// Max of capacity over discharge samples (current < 0); all samples when the
// cycle has no discharge segment.
double max_discharge_capacity(const CycleSeries& cycle);

// Fills max_discharge_capacity_ah and validates; throws DataError.
CellRecord make_cell(std::string cell_id, double nominal_capacity_ah, std::string dataset,
                     std::string protocol, std::vector<CycleSeries> cycles);
void validate_cell(const CellRecord& cell);

// Canonical cell directory: meta.json + cycles.csv.
CellRecord load_cell(const std::filesystem::path& dir);
void write_cell(const CellRecord& cell, const std::filesystem::path& dir);
// Every immediate subdirectory holding a meta.json, sorted by name.
std::vector<CellRecord> load_corpus(const std::filesystem::path& dir);

// cycle_life is the last cycle before the first one whose max discharge
// capacity falls below eol_threshold * nominal.
LifeLabel compute_cycle_life(const CellRecord& cell, double eol_threshold = 0.8);
std::vector<int> compute_rul_labels(const CellRecord& cell, const LifeLabel& life);

// ------------------------------------------------------ synthetic cells

// Fade model Q(c) = Q0 * (1 - 0.25 * (c / L)^knee) plus uniform noise of
// amplitude noise * Q0. With noise > 0, each stream of a cycle also gets a
// single-sample x`spike_factor` spike with probability `spike_rate`.
struct SynthParams {
  int cycle_life_target = 200;  // L
  double nominal_capacity_ah = 1.1;
  double knee = 1.0;            // beta
  double noise = 0.0;           // eta
  int samples_per_cycle = 32;   // m
  double spike_rate = 1.0 / 20.0;
  double spike_factor = 1.5;
  std::string dataset = "synthetic";
  std::string protocol = "synthetic";

  void validate() const;
  // Noise-free capacity of cycle c.
  double fade(int cycle) const;
  // Number of cycles generated: past the knee-free EOL for any threshold > 0.75.
  int total_cycles() const { return cycle_life_target + cycle_life_target / 10 + 1; }
};

CellRecord generate_synthetic_cell(std::uint64_t seed, const SynthParams& params,
                                   std::string cell_id = "synthetic");

struct SynthCorpusParams {
  std::size_t cells = 20;
  int life_min = 120;
  int life_max = 240;
  std::string id_prefix = "syn";
  SynthParams base;  // cycle_life_target is drawn per cell
};

std::vector<CellRecord> generate_corpus(std::uint64_t seed, const SynthCorpusParams& params);

}  // namespace rulnet
