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
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "rulnet/error.hpp"
#include "rulnet/eval.hpp"
#include "test_util.hpp"

using namespace rulnet;
using rulnet::testing::TempDir;

namespace {

std::vector<CellRecord> cells(std::uint64_t seed, std::size_t n) {
  SynthCorpusParams p;
  p.cells = n;
  p.life_min = 60;
  p.life_max = 90;
  p.base.samples_per_cycle = 16;
  return generate_corpus(seed, p);
}

RulPredictor offset_predictor(std::map<std::string, double> offsets) {
  return [offsets](std::span<const SampleWindow> w) {
    std::vector<double> out;
    for (const auto& s : w) out.push_back(s.rul_label + offsets.at(s.cell_id));
    return out;
  };
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(field);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("metrics: perfect prediction") {
  const std::vector<double> y{500, 400, 300, 200};
  const Metrics m = compute_metrics(y, y, 700);
  CHECK(m.rmse == 0.0);
  REQUIRE(m.r2.has_value());
  CHECK(*m.r2 == 1.0);
  CHECK(m.mape == 0.0);
}

TEST_CASE("metrics: mean prediction gives zero R^2") {
  const std::vector<double> y{1, 2, 3, 6};
  const std::vector<double> p(4, 3.0);
  CHECK(std::abs(*compute_metrics(y, p, 10).r2) < 1e-15);
}

TEST_CASE("metrics: MAPE uses the cycle life as denominator") {
  const std::vector<double> y{1000, 500};
  const std::vector<double> p{1100, 200};
  const Metrics m = compute_metrics(y, p, 2000);
  CHECK(m.mape == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(m.rmse == doctest::Approx(std::sqrt((100.0 * 100 + 300.0 * 300) / 2)).epsilon(1e-14));
  CHECK(mape_standard(y, p) == doctest::Approx((0.1 + 0.6) / 2 * 100).epsilon(1e-14));
}

TEST_CASE("metrics: constant observations leave R^2 undefined") {
  const std::vector<double> y{5, 5, 5};
  const std::vector<double> p{4, 5, 6};
  const Metrics m = compute_metrics(y, p, 20);
  CHECK_FALSE(m.r2.has_value());
  CHECK(m.rmse > 0.0);
}

TEST_CASE("metrics: input validation") {
  const std::vector<double> a{1, 2}, b{1};
  CHECK_THROWS(compute_metrics(a, b, 10));
  CHECK_THROWS(compute_metrics(a, a, 0));
  CHECK_THROWS(compute_metrics({}, {}, 10));
}

TEST_CASE("metrics: permutation invariance and ranges") {
  CounterRng rng(3, stream_id("test.eval.perm"));
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> y(12), p(12);
    for (std::size_t i = 0; i < 12; ++i) {
      y[i] = rng.uniform(0, 1000);
      p[i] = y[i] + rng.uniform(-200, 200);
    }
    const Metrics a = compute_metrics(y, p, 1000);
    std::vector<std::size_t> order(12);
    for (std::size_t i = 0; i < 12; ++i) order[i] = i;
    shuffle(order, rng);
    std::vector<double> y2, p2;
    for (std::size_t i : order) {
      y2.push_back(y[i]);
      p2.push_back(p[i]);
    }
    const Metrics b = compute_metrics(y2, p2, 1000);
    CHECK(a.rmse == doctest::Approx(b.rmse).epsilon(1e-12));
    CHECK(*a.r2 == doctest::Approx(*b.r2).epsilon(1e-12));
    CHECK(a.mape == doctest::Approx(b.mape).epsilon(1e-12));
    CHECK(a.rmse >= 0.0);
    CHECK(*a.r2 <= 1.0);
    CHECK(a.mape >= 0.0);
  }
}

TEST_CASE("evaluate: perfect predictor on a single cell") {
  const auto c = cells(1, 1);
  const EvalReport r = evaluate_cells(offset_predictor({{c[0].cell_id, 0.0}}), c, {});
  REQUIRE(r.per_cell.size() == 1);
  CHECK(r.rmse_cycles == 0.0);
  CHECK(*r.r2 == 1.0);
  CHECK(r.mape_percent == 0.0);
  CHECK(r.per_cell[0].n_windows == r.traces.size());
}

TEST_CASE("evaluate: aggregates are unweighted per-cell means") {
  const auto c = cells(2, 3);
  const EvalReport r = evaluate_cells(
      offset_predictor({{c[0].cell_id, 100.0}, {c[1].cell_id, -200.0}, {c[2].cell_id, 30.0}}), c,
      {});
  REQUIRE(r.per_cell.size() == 3);
  double rm = 0.0, r2 = 0.0, mp = 0.0;
  for (const auto& pc : r.per_cell) {
    rm += pc.rmse_cycles;
    r2 += *pc.r2;
    mp += pc.mape_percent;
  }
  CHECK(std::abs(r.rmse_cycles - rm / 3) < 1e-12);
  CHECK(std::abs(*r.r2 - r2 / 3) < 1e-12);
  CHECK(std::abs(r.mape_percent - mp / 3) < 1e-12);
  CHECK(std::abs(r.per_cell[0].rmse_cycles - 100.0) < 1e-9);

  const std::vector<CellRecord> two{c[0], c[1]};
  const EvalReport t = evaluate_cells(
      offset_predictor({{c[0].cell_id, 100.0}, {c[1].cell_id, 200.0}}), two, {});
  CHECK(std::abs(t.rmse_cycles - 150.0) < 1e-9);
}

TEST_CASE("evaluate: cells are reported by id and short cells are skipped") {
  auto c = cells(3, 3);
  std::swap(c[0], c[2]);
  CellRecord short_cell = c[0];
  short_cell.cell_id = "aaa-short";
  short_cell.cycles.resize(25);
  short_cell.max_discharge_capacity_ah.resize(25);
  short_cell.max_discharge_capacity_ah[20] = 0.1;
  c.push_back(short_cell);
  std::map<std::string, double> zero;
  for (const auto& cell : c) zero[cell.cell_id] = 0.0;
  const EvalReport r = evaluate_cells(offset_predictor(zero), c, {});
  REQUIRE(r.per_cell.size() == 3);
  CHECK(r.per_cell[0].cell_id < r.per_cell[1].cell_id);
  CHECK(r.per_cell[1].cell_id < r.per_cell[2].cell_id);
  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped[0].cell_id == "aaa-short");

  const nlohmann::json j = to_json(r);
  CHECK(j.at("per_cell").size() == 3);
  CHECK(j.at("aggregate").at("rmse_cycles") == 0.0);
  CHECK(j.at("skipped").size() == 1);
}

TEST_CASE("traces: CSV round trip with decreasing observed RUL per cell") {
  const auto c = cells(4, 2);
  const EvalReport r = evaluate_cells(
      offset_predictor({{c[0].cell_id, 12.5}, {c[1].cell_id, -3.0}}), c, {});
  TempDir dir("traces");
  export_traces(r, dir / "t.csv");
  const auto rows = read_csv(dir / "t.csv");
  REQUIRE(rows.size() == r.traces.size() + 1);
  CHECK(rows[0] == std::vector<std::string>{"cell_id", "anchor_cycle", "observed_rul",
                                             "predicted_rul"});
  CHECK(read_traces(dir / "t.csv") == r.traces);
  for (std::size_t i = 1; i < r.traces.size(); ++i) {
    if (r.traces[i].cell_id == r.traces[i - 1].cell_id) {
      CHECK(r.traces[i].observed_rul < r.traces[i - 1].observed_rul);
    }
  }
}

TEST_CASE("embeddings: one row per window, deterministic, domains coincide on equal input") {
  ModelConfig mc;
  mc.hidden = 8;
  mc.heads = 2;
  mc.predictor_dims = {4, 1};
  const HybridoModel model = init_model(mc, 1);
  const auto windows = build_corpus_windows(cells(5, 2), PreprocessConfig{});
  const ScalerParams scaler = fit_minmax_scaler(windows);
  const std::vector<DomainWindows> domains{{"source", windows, &scaler},
                                           {"target", windows, &scaler}};
  TempDir dir("emb");
  export_embeddings(model, domains, dir / "a.csv");
  export_embeddings(model, domains, dir / "b.csv");
  const auto a = read_csv(dir / "a.csv");
  CHECK(a == read_csv(dir / "b.csv"));
  REQUIRE(a.size() == 2 * windows.size() + 1);
  CHECK(a[0].size() == 3 + 8);
  CHECK(a[0][2] == "domain");
  CHECK(a[0][3] == "f0");
  const std::size_t n = windows.size();
  for (std::size_t i = 1; i <= n; ++i) {
    CHECK(a[i][2] == "source");
    CHECK(a[i + n][2] == "target");
    CHECK(std::equal(a[i].begin() + 3, a[i].end(), a[i + n].begin() + 3));
    CHECK(a[i][0] == a[i + n][0]);
  }
}
