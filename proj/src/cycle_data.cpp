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

#include "rulnet/cycle_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "rulnet/error.hpp"

namespace rulnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCsvHeader = "cycle_index,time_s,voltage_v,current_a,capacity_ah";

[[noreturn]] void fail(const fs::path& file, std::size_t line, const std::string& rule) {
  std::string where = file.string();
  if (line > 0) where += ":" + std::to_string(line);
  throw DataError(where + ": " + rule);
}

double parse_double(std::string_view field, const fs::path& file, std::size_t line,
                    const char* column) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    fail(file, line, std::string("malformed ") + column + " value '" + std::string(field) + "'");
  }
  return v;
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

void validate_cycle(const CycleSeries& c, const fs::path& file) {
  const std::size_t n = c.time_s.size();
  if (n == 0) fail(file, 0, "empty cycle " + std::to_string(c.cycle_index));
  if (c.voltage_v.size() != n || c.current_a.size() != n || c.capacity_ah.size() != n) {
    fail(file, 0, "unequal stream lengths in cycle " + std::to_string(c.cycle_index));
  }
  if (c.cycle_index < 1) fail(file, 0, "cycle_index must be >= 1");
  for (std::size_t i = 1; i < n; ++i) {
    if (c.time_s[i] < c.time_s[i - 1]) {
      fail(file, 0, "time_s decreases within cycle " + std::to_string(c.cycle_index));
    }
  }
}

}  // namespace

double max_discharge_capacity(const CycleSeries& cycle) {
  double best = -std::numeric_limits<double>::infinity();
  bool any_discharge = false;
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    if (cycle.current_a[i] < 0.0) {
      best = any_discharge ? std::max(best, cycle.capacity_ah[i]) : cycle.capacity_ah[i];
      any_discharge = true;
    }
  }
  if (!any_discharge) {
    best = *std::max_element(cycle.capacity_ah.begin(), cycle.capacity_ah.end());
  }
  return best;
}

void validate_cell(const CellRecord& cell) {
  const fs::path where = cell.cell_id.empty() ? fs::path("<cell>") : fs::path(cell.cell_id);
  if (!(cell.nominal_capacity_ah > 0.0)) fail(where, 0, "nominal_capacity_ah must be positive");
  if (cell.cycles.empty()) fail(where, 0, "no cycles");
  for (std::size_t i = 0; i < cell.cycles.size(); ++i) {
    if (cell.cycles[i].cycle_index != static_cast<int>(i) + 1) {
      fail(where, 0, "non-contiguous cycle_index (expected " + std::to_string(i + 1) + ", got " +
                         std::to_string(cell.cycles[i].cycle_index) + ")");
    }
    validate_cycle(cell.cycles[i], where);
  }
  if (cell.max_discharge_capacity_ah.size() != cell.cycles.size()) {
    fail(where, 0, "max_discharge_capacity_ah length differs from cycle count");
  }
}

CellRecord make_cell(std::string cell_id, double nominal_capacity_ah, std::string dataset,
                     std::string protocol, std::vector<CycleSeries> cycles) {
  CellRecord cell{std::move(cell_id), nominal_capacity_ah, std::move(dataset),
                  std::move(protocol), std::move(cycles), {}};
  cell.max_discharge_capacity_ah.reserve(cell.cycles.size());
  for (const auto& c : cell.cycles) {
    if (c.size() == 0) {
      fail(cell.cell_id, 0, "empty cycle " + std::to_string(c.cycle_index));
    }
    cell.max_discharge_capacity_ah.push_back(max_discharge_capacity(c));
  }
  validate_cell(cell);
  return cell;
}

CellRecord load_cell(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  const fs::path csv_path = dir / "cycles.csv";
  if (!fs::exists(meta_path)) fail(meta_path, 0, "missing file");
  if (!fs::exists(csv_path)) fail(csv_path, 0, "missing file");

  json meta;
  {
    std::ifstream in(meta_path);
    try {
      meta = json::parse(in);
    } catch (const json::exception& e) {
      fail(meta_path, 0, std::string("invalid JSON: ") + e.what());
    }
  }
  auto require = [&](const char* key, json::value_t type) -> const json& {
    if (!meta.is_object() || !meta.contains(key)) {
      fail(meta_path, 0, std::string("missing key '") + key + "'");
    }
    const json& v = meta.at(key);
    const bool ok = type == json::value_t::number_float ? v.is_number() : v.type() == type;
    if (!ok) fail(meta_path, 0, std::string("wrong type for key '") + key + "'");
    return v;
  };
  const std::string cell_id = require("cell_id", json::value_t::string).get<std::string>();
  const double nominal = require("nominal_capacity_ah", json::value_t::number_float).get<double>();
  const std::string dataset = require("dataset", json::value_t::string).get<std::string>();
  const std::string protocol = require("protocol", json::value_t::string).get<std::string>();
  if (!(nominal > 0.0)) fail(meta_path, 0, "nominal_capacity_ah must be positive");

  std::ifstream in(csv_path, std::ios::binary);
  std::string line;
  std::size_t line_no = 0;
  std::vector<CycleSeries> cycles;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      if (line != kCsvHeader) fail(csv_path, line_no, std::string("header must be '") + kCsvHeader + "'");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    std::string_view rest(line);
    std::string_view fields[5];
    for (int f = 0; f < 5; ++f) {
      const auto comma = rest.find(',');
      if (f < 4) {
        if (comma == std::string_view::npos) fail(csv_path, line_no, "expected 5 fields");
        fields[f] = rest.substr(0, comma);
        rest.remove_prefix(comma + 1);
      } else {
        if (comma != std::string_view::npos) fail(csv_path, line_no, "expected 5 fields");
        fields[f] = rest;
      }
    }
    int index = 0;
    {
      auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), index);
      if (ec != std::errc() || ptr != fields[0].data() + fields[0].size()) {
        fail(csv_path, line_no, "malformed cycle_index '" + std::string(fields[0]) + "'");
      }
    }
    if (cycles.empty() || cycles.back().cycle_index != index) {
      const int expected = cycles.empty() ? 1 : cycles.back().cycle_index + 1;
      if (!cycles.empty() && index < expected) {
        fail(csv_path, line_no, "rows not grouped by ascending cycle_index");
      }
      if (index != expected) {
        fail(csv_path, line_no, "non-contiguous cycle_index (expected " +
                                    std::to_string(expected) + ", got " + std::to_string(index) + ")");
      }
      cycles.push_back(CycleSeries{index, {}, {}, {}, {}});
    }
    CycleSeries& c = cycles.back();
    const double t = parse_double(fields[1], csv_path, line_no, "time_s");
    if (!c.time_s.empty() && t < c.time_s.back()) {
      fail(csv_path, line_no, "time_s decreases within cycle " + std::to_string(index));
    }
    c.time_s.push_back(t);
    c.voltage_v.push_back(parse_double(fields[2], csv_path, line_no, "voltage_v"));
    c.current_a.push_back(parse_double(fields[3], csv_path, line_no, "current_a"));
    c.capacity_ah.push_back(parse_double(fields[4], csv_path, line_no, "capacity_ah"));
  }
  if (!header_seen) fail(csv_path, 0, "no cycles (empty file)");
  if (cycles.empty()) fail(csv_path, 0, "no cycles");
  return make_cell(cell_id, nominal, dataset, protocol, std::move(cycles));
}

void write_cell(const CellRecord& cell, const fs::path& dir) {
  validate_cell(cell);
  fs::create_directories(dir);
  json meta = {{"cell_id", cell.cell_id},
               {"nominal_capacity_ah", cell.nominal_capacity_ah},
               {"dataset", cell.dataset},
               {"protocol", cell.protocol}};
  {
    std::ofstream out(dir / "meta.json", std::ios::binary);
    out << meta.dump(2) << '\n';
    if (!out) throw DataError((dir / "meta.json").string() + ": write failed");
  }
  std::string buf;
  buf.reserve(1 << 16);
  buf += kCsvHeader;
  buf += '\n';
  for (const auto& c : cell.cycles) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      buf += std::to_string(c.cycle_index);
      buf += ',';
      append_double(buf, c.time_s[i]);
      buf += ',';
      append_double(buf, c.voltage_v[i]);
      buf += ',';
      append_double(buf, c.current_a[i]);
      buf += ',';
      append_double(buf, c.capacity_ah[i]);
      buf += '\n';
    }
  }
  std::ofstream out(dir / "cycles.csv", std::ios::binary);
  out << buf;
  if (!out) throw DataError((dir / "cycles.csv").string() + ": write failed");
}

std::vector<CellRecord> load_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError(dir.string() + ": not a directory");
  std::vector<fs::path> cell_dirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) {
      cell_dirs.push_back(entry.path());
    }
  }
  std::sort(cell_dirs.begin(), cell_dirs.end());
  if (cell_dirs.empty()) throw DataError(dir.string() + ": no cell directories");
  std::vector<CellRecord> cells;
  cells.reserve(cell_dirs.size());
  for (const auto& d : cell_dirs) cells.push_back(load_cell(d));
  return cells;
}

LifeLabel compute_cycle_life(const CellRecord& cell, double eol_threshold) {
  if (!(eol_threshold > 0.0 && eol_threshold < 1.0)) {
    throw ConfigError("eol_threshold must be in (0, 1)");
  }
  const double limit = eol_threshold * cell.nominal_capacity_ah;
  const auto& caps = cell.max_discharge_capacity_ah;
  std::size_t first_below = caps.size();
  for (std::size_t i = 0; i < caps.size(); ++i) {
    if (caps[i] < limit) {
      first_below = i;
      break;
    }
  }
  if (first_below == caps.size()) {
    throw DataError(cell.cell_id + ": EOL not reached");
  }
  if (first_below == 0) {
    throw DataError(cell.cell_id + ": below EOL threshold at the first cycle");
  }
  LifeLabel life;
  life.cycle_life = static_cast<int>(first_below);  // 1-based index of the last good cycle
  life.eol_threshold = eol_threshold;
  life.rul = compute_rul_labels(cell, life);
  return life;
}

std::vector<int> compute_rul_labels(const CellRecord& cell, const LifeLabel& life) {
  if (life.cycle_life < 1 || static_cast<std::size_t>(life.cycle_life) > cell.cycles.size()) {
    throw DataError(cell.cell_id + ": cycle_life outside the recorded cycles");
  }
  std::vector<int> rul(static_cast<std::size_t>(life.cycle_life));
  for (int c = 1; c <= life.cycle_life; ++c) rul[c - 1] = life.cycle_life - c;
  return rul;
}

}  // namespace rulnet
