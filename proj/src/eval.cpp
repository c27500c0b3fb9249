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

#include "rulnet/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rulnet/error.hpp"

namespace rulnet {

namespace {

void check_pairs(std::span<const double> observed, std::span<const double> predicted) {
  if (observed.empty()) throw std::invalid_argument("metrics: empty sequences");
  if (observed.size() != predicted.size()) {
    throw std::invalid_argument("metrics: observed and predicted lengths differ");
  }
}

std::string fmt(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

double rmse(std::span<const double> observed, std::span<const double> predicted) {
  check_pairs(observed, predicted);
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = observed[i] - predicted[i];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(observed.size()));
}

Metrics compute_metrics(std::span<const double> observed, std::span<const double> predicted,
                        int cycle_life) {
  check_pairs(observed, predicted);
  if (cycle_life <= 0) throw std::invalid_argument("metrics: cycle_life must be positive");
  const double n = static_cast<double>(observed.size());
  double mean = 0.0;
  for (double y : observed) mean += y;
  mean /= n;
  double sse = 0.0, sst = 0.0, abs_err = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = observed[i] - predicted[i];
    sse += e * e;
    abs_err += std::abs(e);
    const double d = observed[i] - mean;
    sst += d * d;
  }
  Metrics m;
  m.rmse = std::sqrt(sse / n);
  if (sst > 0.0) m.r2 = 1.0 - sse / sst;
  m.mape = abs_err / n / static_cast<double>(cycle_life) * 100.0;
  return m;
}

double mape_standard(std::span<const double> observed, std::span<const double> predicted) {
  check_pairs(observed, predicted);
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (observed[i] == 0.0) continue;
    s += std::abs(observed[i] - predicted[i]) / std::abs(observed[i]);
    ++n;
  }
  if (n == 0) throw std::invalid_argument("mape_standard: every observed value is zero");
  return s / static_cast<double>(n) * 100.0;
}

EvalReport evaluate_cells(const RulPredictor& predict, const std::vector<CellRecord>& cells,
                          const PreprocessConfig& config) {
  config.validate();
  std::vector<const CellRecord*> order;
  for (const auto& c : cells) order.push_back(&c);
  std::sort(order.begin(), order.end(),
            [](const CellRecord* a, const CellRecord* b) { return a->cell_id < b->cell_id; });

  EvalReport report;
  std::size_t r2_cells = 0;
  double r2_sum = 0.0;
  for (const CellRecord* cell : order) {
    LifeLabel life;
    try {
      life = compute_cycle_life(*cell, config.eol_threshold);
    } catch (const DataError& e) {
      report.skipped.push_back({cell->cell_id, e.what()});
      continue;
    }
    const WindowBuild build = build_sample_windows(*cell, life, config);
    if (build.windows.empty()) {
      report.skipped.push_back({cell->cell_id, "no windows (cycle life " +
                                                   std::to_string(life.cycle_life) + ")"});
      continue;
    }
    const std::vector<double> predicted = predict(build.windows);
    std::vector<double> observed;
    for (const auto& w : build.windows) observed.push_back(w.rul_label);
    const Metrics m = compute_metrics(observed, predicted, life.cycle_life);

    CellMetrics cm{cell->cell_id, cell->protocol, life.cycle_life, m.rmse, m.r2, m.mape,
                   build.windows.size()};
    report.per_cell.push_back(cm);
    if (m.r2) {
      r2_sum += *m.r2;
      ++r2_cells;
    }
    for (std::size_t i = 0; i < build.windows.size(); ++i) {
      report.traces.push_back(
          {cell->cell_id, build.windows[i].anchor_cycle, observed[i], predicted[i]});
    }
  }
  if (!report.per_cell.empty()) {
    const double n = static_cast<double>(report.per_cell.size());
    for (const auto& c : report.per_cell) {
      report.rmse_cycles += c.rmse_cycles;
      report.mape_percent += c.mape_percent;
    }
    report.rmse_cycles /= n;
    report.mape_percent /= n;
  }
  if (r2_cells > 0) report.r2 = r2_sum / static_cast<double>(r2_cells);
  return report;
}

EvalReport evaluate_cells(const HybridoModel& model, const std::vector<CellRecord>& cells,
                          const ScalerParams& scaler, const PreprocessConfig& config) {
  return evaluate_cells(
      [&](std::span<const SampleWindow> w) { return predict_rul(model, w, scaler); }, cells,
      config);
}

EvalReport evaluate_cells(const Ensemble& ensemble, const std::vector<CellRecord>& cells,
                          const PreprocessConfig& config) {
  return evaluate_cells([&](std::span<const SampleWindow> w) { return ensemble.predict(w); },
                        cells, config);
}

nlohmann::json to_json(const EvalReport& report) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json per_cell = nlohmann::json::array();
  for (const auto& c : report.per_cell) {
    per_cell.push_back({{"cell_id", c.cell_id},
                        {"protocol", c.protocol},
                        {"cycle_life", c.cycle_life},
                        {"rmse_cycles", c.rmse_cycles},
                        {"r2", opt(c.r2)},
                        {"mape_percent", c.mape_percent},
                        {"n_windows", c.n_windows}});
  }
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& s : report.skipped) {
    skipped.push_back({{"cell_id", s.cell_id}, {"reason", s.reason}});
  }
  nlohmann::json traces = nlohmann::json::array();
  for (const auto& t : report.traces) {
    traces.push_back({{"cell_id", t.cell_id},
                      {"anchor_cycle", t.anchor_cycle},
                      {"observed_rul", t.observed_rul},
                      {"predicted_rul", t.predicted_rul}});
  }
  return {{"per_cell", std::move(per_cell)},
          {"aggregate",
           {{"rmse_cycles", report.rmse_cycles},
            {"r2", opt(report.r2)},
            {"mape_percent", report.mape_percent},
            {"cells", report.per_cell.size()}}},
          {"skipped", std::move(skipped)},
          {"traces", std::move(traces)}};
}

void export_traces(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot write traces");
  out << "cell_id,anchor_cycle,observed_rul,predicted_rul\n";
  for (const auto& t : report.traces) {
    out << t.cell_id << ',' << t.anchor_cycle << ',' << fmt(t.observed_rul) << ','
        << fmt(t.predicted_rul) << '\n';
  }
  if (!out) throw DataError(path.string() + ": write failed");
}

std::vector<TracePoint> read_traces(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open traces");
  std::string line;
  if (!std::getline(in, line) || line != "cell_id,anchor_cycle,observed_rul,predicted_rul") {
    throw DataError(path.string() + ":1: unexpected trace header");
  }
  std::vector<TracePoint> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() != 4) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 4 fields");
    }
    TracePoint t;
    t.cell_id = f[0];
    auto bad = [&] {
      return DataError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    };
    if (std::from_chars(f[1].data(), f[1].data() + f[1].size(), t.anchor_cycle).ec != std::errc{})
      throw bad();
    if (std::from_chars(f[2].data(), f[2].data() + f[2].size(), t.observed_rul).ec != std::errc{})
      throw bad();
    if (std::from_chars(f[3].data(), f[3].data() + f[3].size(), t.predicted_rul).ec != std::errc{})
      throw bad();
    out.push_back(std::move(t));
  }
  return out;
}

void export_embeddings(const HybridoModel& model, std::span<const DomainWindows> domains,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot write embeddings");
  const std::size_t d = model.config().hidden;
  out << "cell_id,anchor_cycle,domain";
  for (std::size_t j = 0; j < d; ++j) out << ",f" << j;
  out << '\n';
  for (const auto& dom : domains) {
    if (dom.windows.empty()) continue;
    if (!dom.scaler) throw ConfigError("export_embeddings: domain '" + dom.domain + "' has no scaler");
    const ModelInput in = to_model_input(dom.windows, *dom.scaler);
    const Tensor f = model.extract_features(in.x);
    for (std::size_t i = 0; i < dom.windows.size(); ++i) {
      out << dom.windows[i].cell_id << ',' << dom.windows[i].anchor_cycle << ',' << dom.domain;
      for (std::size_t j = 0; j < d; ++j) out << ',' << fmt(f.at(i, j));
      out << '\n';
    }
  }
  if (!out) throw DataError(path.string() + ": write failed");
}

}  // namespace rulnet
