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

#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "rulnet/error.hpp"
#include "rulnet/preprocess.hpp"
#include "test_util.hpp"

using namespace rulnet;

namespace {

// Cycle c carries constant current -c, so a window's cycle indices can be
// read back from its current-mean features.
CellRecord indexed_cell(int cycles, int life) {
  std::vector<CycleSeries> cs;
  for (int c = 1; c <= cycles; ++c) {
    const double cap = c <= life ? 1.0 : 0.5;
    cs.push_back({c, {0, 1, 2}, {3.3, 2.6, 2.0}, {-double(c), -double(c), -double(c)},
                  {0.0, cap / 2, cap}});
  }
  return make_cell("idx", 1.0, "t", "p", std::move(cs));
}

SampleWindow window_with(double value, int label) {
  SampleWindow w;
  w.rul_label = label;
  w.cell_id = "w";
  FeatureMatrix m{};
  for (auto& row : m) row.fill(value);
  w.features.assign(10, m);
  return w;
}

}  // namespace

TEST_CASE("median filter examples") {
  CHECK(median_filter(std::vector<double>{1, 9, 1, 1, 1}, 3).values ==
        std::vector<double>{1, 1, 1, 1, 1});
  CHECK(median_filter(std::vector<double>{1, 2, 3, 4, 5}, 3).values ==
        std::vector<double>{1, 2, 3, 4, 5});
  const std::vector<double> constant(9, 2.5);
  for (std::size_t k : {1u, 3u, 5u, 9u, 11u}) CHECK(median_filter(constant, k).values == constant);
  CHECK_THROWS(median_filter(constant, 4));
  CHECK_THROWS(median_filter(constant, 0));
  const FilterResult wide = median_filter(std::vector<double>{5, 1, 3}, 5);
  CHECK(wide.kernel_exceeds_length);
  CHECK(wide.values == std::vector<double>{3, 3, 3});
  CHECK_FALSE(median_filter(constant, 3).kernel_exceeds_length);
}

TEST_CASE("median filter stays within the input range and is idempotent on constants") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Tensor t = rulnet::testing::random_tensor({40}, seed, -3.0, 7.0);
    const std::vector<double> x(t.vec());
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    for (std::size_t k : {3u, 5u, 7u}) {
      const auto y = median_filter(x, k).values;
      REQUIRE(y.size() == x.size());
      for (double v : y) {
        CHECK(v >= *lo);
        CHECK(v <= *hi);
      }
    }
  }
}

TEST_CASE("median_of uses the midpoint for even counts") {
  CHECK(median_of({4, 1, 3, 2}) == 2.5);
  CHECK(median_of({7}) == 7.0);
  CHECK(median_of({3, 1, 2}) == 2.0);
}

TEST_CASE("channel statistics examples") {
  const auto s = channel_statistics(std::vector<double>{1, 2, 3, 4});
  CHECK(s[st_mean] == 2.5);
  CHECK(s[st_std] == doctest::Approx(1.118033988749895).epsilon(1e-15));
  CHECK(s[st_min] == 1.0);
  CHECK(s[st_max] == 4.0);
  CHECK(s[st_var] == 1.25);
  CHECK(s[st_med] == 2.5);
  const auto c = channel_statistics(std::vector<double>(6, -0.7));
  CHECK(c == std::array<double, 6>{-0.7, 0.0, -0.7, -0.7, 0.0, -0.7});
  CHECK_THROWS(channel_statistics(std::vector<double>{}));
}

TEST_CASE("feature matrix invariants on synthetic cycles") {
  SynthParams p;
  p.noise = 0.05;
  const CellRecord cell = generate_synthetic_cell(4, p);
  for (std::size_t c = 0; c < cell.cycles.size(); c += 7) {
    for (std::size_t kernel : {1u, 5u}) {
      const FeatureMatrix m = extract_features(cell.cycles[c], kernel);
      for (const auto& row : m) {
        CHECK(row[st_min] <= row[st_med]);
        CHECK(row[st_med] <= row[st_max]);
        CHECK(row[st_min] <= row[st_mean] + 1e-12);
        CHECK(row[st_mean] <= row[st_max] + 1e-12);
        CHECK(std::abs(row[st_var] - row[st_std] * row[st_std]) <= 1e-12 * std::max(1.0, row[st_var]));
      }
    }
  }
}

TEST_CASE("kernel 1 leaves the signals unfiltered") {
  CycleSeries c{1, {0, 1, 2, 3, 4}, {3, 3, 9, 3, 3}, {-1, -1, -1, -1, -1}, {0, 1, 2, 3, 4}};
  CHECK(extract_features(c, 1)[ch_voltage][st_max] == 9.0);
  CHECK(extract_features(c, 3)[ch_voltage][st_max] == 3.0);
}

TEST_CASE("window assembly uses cycles c-27..c at stride 3") {
  const CellRecord cell = indexed_cell(120, 100);
  const LifeLabel life = compute_cycle_life(cell, 0.8);
  REQUIRE(life.cycle_life == 100);
  const WindowBuild b = build_sample_windows(cell, life, 5);
  REQUIRE(b.windows.size() == 71);
  CHECK_FALSE(b.too_short);
  const SampleWindow& first = b.windows.front();
  CHECK(first.anchor_cycle == 30);
  CHECK(first.rul_label == 70);
  CHECK(first.cell_id == "idx");
  std::vector<int> used;
  for (const auto& m : first.features) used.push_back(static_cast<int>(-m[ch_current][st_mean]));
  CHECK(used == std::vector<int>{3, 6, 9, 12, 15, 18, 21, 24, 27, 30});
  CHECK(b.windows.back().anchor_cycle == 100);
  CHECK(b.windows.back().rul_label == 0);
}

TEST_CASE("cells shorter than one window give no windows") {
  const CellRecord cell = indexed_cell(40, 29);
  const WindowBuild b = build_sample_windows(cell, compute_cycle_life(cell, 0.8), 5);
  CHECK(b.windows.empty());
  CHECK(b.too_short);
}

TEST_CASE("window count per cell equals max(0, cycle_life - 29)") {
  SynthCorpusParams cp;
  cp.cells = 6;
  cp.life_min = 60;
  cp.life_max = 140;
  cp.base.noise = 0.01;
  const auto cells = generate_corpus(3, cp);
  std::size_t total = 0;
  for (const auto& cell : cells) {
    const LifeLabel life = compute_cycle_life(cell, 0.8);
    const auto b = build_sample_windows(cell, life, 5);
    CHECK(b.windows.size() == static_cast<std::size_t>(std::max(0, life.cycle_life - 29)));
    total += b.windows.size();
  }
  const auto all = build_corpus_windows(cells, PreprocessConfig{});
  CHECK(all.size() == total);
  const Tensor t = assemble_feature_tensor(all);
  CHECK(t.shape() == Shape{total, 10, 3, 6});
}

TEST_CASE("scaler fitting examples") {
  std::vector<SampleWindow> one{window_with(3.0, 5)};
  const ScalerParams s1 = fit_minmax_scaler(one);
  CHECK(s1.min == s1.max);
  CHECK_THROWS_AS(fit_minmax_scaler(std::vector<SampleWindow>{}), DataError);

  std::vector<SampleWindow> two{window_with(2.0, 70), window_with(6.0, 840), window_with(4.0, 120)};
  const ScalerParams s = fit_minmax_scaler(two);
  for (std::size_t j = 0; j < kFeatures; ++j) {
    CHECK(s.min[j] == 2.0);
    CHECK(s.max[j] == 6.0);
  }
  CHECK(s.label_max == 840.0);
}

TEST_CASE("transform: endpoints, range guard and no clipping") {
  std::vector<SampleWindow> two{window_with(2.0, 70), window_with(6.0, 840)};
  const ScalerParams s = fit_minmax_scaler(two);
  CHECK(transform_features(window_with(2.0, 0), s).features[3][1][2] == 0.0);
  CHECK(transform_features(window_with(6.0, 0), s).features[0][0][0] == 1.0);
  CHECK(transform_features(window_with(8.0, 0), s).features[9][2][5] == 1.5);
  const ScalerParams flat = fit_minmax_scaler(std::vector<SampleWindow>{window_with(3.0, 1)});
  CHECK(transform_features(window_with(7.0, 0), flat).features[0][0][0] == 0.0);
  CHECK(scale_label(420.0, s) == 0.5);
  CHECK(scale_label(2000.0, s) == 1.0);
  CHECK(scale_label(-5.0, s) == 0.0);
}

TEST_CASE("transform and inverse on real windows") {
  SynthCorpusParams cp;
  cp.cells = 3;
  cp.base.noise = 0.02;
  const auto windows = build_corpus_windows(generate_corpus(5, cp), PreprocessConfig{});
  const ScalerParams s = fit_minmax_scaler(windows);
  for (std::size_t i = 0; i < windows.size(); i += 13) {
    const SampleWindow scaled = transform_features(windows[i], s);
    const SampleWindow back = inverse_transform_features(scaled, s);
    for (std::size_t t = 0; t < 10; ++t) {
      for (std::size_t ch = 0; ch < kChannels; ++ch) {
        for (std::size_t st = 0; st < kStats; ++st) {
          const double v = scaled.features[t][ch][st];
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
          const double x = windows[i].features[t][ch][st];
          const std::size_t j = ch * kStats + st;
          if (s.max[j] > s.min[j]) {
            CHECK(std::abs(back.features[t][ch][st] - x) <= 1e-10 * std::max(1.0, std::abs(x)));
          }
        }
      }
    }
  }
}

TEST_CASE("scaler json round trip and model input layout") {
  SynthCorpusParams cp;
  cp.cells = 2;
  cp.base.noise = 0.02;
  const auto windows = build_corpus_windows(generate_corpus(8, cp), PreprocessConfig{});
  const ScalerParams s = fit_minmax_scaler(windows);
  const auto j = scaler_to_json(s);
  CHECK(j.at("min").size() == 18);
  CHECK(scaler_from_json(j) == s);
  CHECK_THROWS_AS(scaler_from_json(nlohmann::json{{"min", {1, 2}}, {"max", {3}}, {"label_max", 1}}),
                  DataError);

  const ModelInput in = to_model_input(windows, s);
  CHECK(in.x.shape() == Shape{windows.size(), 10, 18});
  CHECK(in.y.shape() == Shape{windows.size(), 1});
  const SampleWindow scaled = transform_features(windows[4], s);
  // channel-major flattening: feature index = channel * 6 + statistic
  CHECK(in.x.at(4, 7, ch_capacity * 6 + st_var) == scaled.features[7][ch_capacity][st_var]);
  CHECK(in.y[4] == scale_label(windows[4].rul_label, s));
}

TEST_CASE("preprocess config validation") {
  PreprocessConfig c;
  CHECK(c.min_anchor() == 30);
  c.kernel = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.kernel = 5;
  c.eol_threshold = 1.2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
