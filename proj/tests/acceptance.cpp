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

// Acceptance gate: one PASS/FAIL/SKIP line per criterion.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rulnet/adapt_loss.hpp"
#include "rulnet/checkpoint.hpp"
#include "rulnet/cycle_data.hpp"
#include "rulnet/eval.hpp"
#include "rulnet/gradcheck.hpp"
#include "rulnet/layers.hpp"
#include "rulnet/model.hpp"
#include "rulnet/preprocess.hpp"
#include "rulnet/trainer.hpp"

using namespace rulnet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  enum class Status { pass, fail, skip } status = Status::fail;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) {
  return {ok ? Outcome::Status::pass : Outcome::Status::fail, std::move(detail)};
}

struct Options {
  std::size_t seeds = 10;
  bool verbose = false;
  std::size_t median_epochs = 10;
  std::size_t median_cells = 16;
  std::size_t da_epochs = 10;
  std::size_t da_source_cells = 16;
  std::size_t da_target_cells = 8;
  std::size_t da_test_cells = 8;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

Tensor random_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  CounterRng rng(seed, stream_id("acceptance.tensor"));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

void randomize(ParamStore& store, std::uint64_t seed, double scale) {
  for (std::size_t p = 0; p < store.size(); ++p) {
    CounterRng rng(seed, stream_id(store[p].name));
    const bool var = store[p].name.ends_with("running_var");
    for (auto& v : store.value(p).data()) {
      v = var ? rng.uniform(0.5, 1.5) : rng.uniform(-scale, scale);
    }
  }
}

template <typename Layer>
GradCheckProblem layer_problem(const Layer& layer) {
  return {[&layer](ParamStore& s, const Tensor& x) { return layer.forward(s, x, nullptr); },
          [&layer](ParamStore& s, const Tensor& x, const Tensor& dy) {
            typename Layer::Cache cache;
            layer.forward(s, x, &cache);
            return layer.backward(s, std::move(cache), dy);
          }};
}

// ------------------------------------------------------------ gradients

Outcome gradient_suite(const Options&) {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr int kInstances = 20;
  const double tol = 1e-4;
  std::map<std::string, std::pair<int, double>> worst;  // family -> (instances, max error)
  auto record = [&](const std::string& family, const GradCheckReport& r) {
    auto& [n, err] = worst[family];
    ++n;
    err = std::max(err, r.checked ? r.max_rel_error : 1.0);
  };
  auto opts = [&](int trial) { return GradCheckOptions{.tolerance = tol, .step = 1e-5,
                                                       .seed = std::uint64_t(trial)}; };

  for (int trial = 0; trial < kInstances; ++trial) {
    const auto seed = static_cast<std::uint64_t>(trial);
    {
      ParamStore s;
      Linear lin(s, "l", 3 + trial % 3, 2 + trial % 2, seed);
      randomize(s, 100 + seed, 0.5);
      record("linear", gradient_check(s, random_tensor({3, lin.in_dim()}, seed),
                                      layer_problem(lin), opts(trial)));
    }
    {
      ParamStore s;
      LstmStack lstm(s, "lstm", 3, 4, 1 + trial % 2, seed);
      randomize(s, 200 + seed, 0.5);
      record("lstm_stack", gradient_check(s, random_tensor({2, std::size_t(3 + trial % 2), 3}, seed),
                                          layer_problem(lstm), opts(trial)));
    }
    {
      ParamStore s;
      MultiheadAttention attn(s, "a", 4, trial % 2 ? 2 : 4, seed);
      randomize(s, 300 + seed, 1.0);
      record("attention", gradient_check(s, random_tensor({2, 3, 4}, seed),
                                         layer_problem(attn), opts(trial)));
    }
    {
      ParamStore s;
      NodeBlock node(s, "n", 3, 1 + trial % 3, seed);
      randomize(s, 400 + seed, 0.5);
      record("node", gradient_check(s, random_tensor({2, 3}, seed), layer_problem(node),
                                    opts(trial)));
    }
    {
      ParamStore s;
      BatchNorm1d bn(s, "bn", 3);
      randomize(s, 500 + seed, 1.0);
      const Tensor x = random_tensor({4, 3}, seed, -2.0, 2.0);
      const GradCheckProblem train{
          [&](ParamStore& st, const Tensor& in) { return bn.forward_train(st, in, nullptr, nullptr); },
          [&](ParamStore& st, const Tensor& in, const Tensor& dy) {
            BatchNorm1d::Cache c;
            bn.forward_train(st, in, &c, nullptr);
            return bn.backward(st, std::move(c), dy);
          }};
      const GradCheckProblem eval{
          [&](ParamStore& st, const Tensor& in) { return bn.forward_eval(st, in, nullptr); },
          [&](ParamStore& st, const Tensor& in, const Tensor& dy) {
            BatchNorm1d::Cache c;
            bn.forward_eval(st, in, &c);
            return bn.backward(st, std::move(c), dy);
          }};
      record("batchnorm_train", gradient_check(s, x, train, opts(trial)));
      record("batchnorm_eval", gradient_check(s, x, eval, opts(trial)));
    }
    {
      ParamStore none;
      const GradCheckProblem off{
          [](ParamStore&, const Tensor& in) {
            CounterRng rng(1, 2);
            return dropout(in, 0.4, Mode::eval, rng, nullptr);
          },
          [](ParamStore&, const Tensor& in, const Tensor& dy) {
            CounterRng rng(1, 2);
            DropoutCache c;
            dropout(in, 0.4, Mode::eval, rng, &c);
            return dropout_backward(std::move(c), dy);
          }};
      record("dropout_off", gradient_check(none, random_tensor({3, 4}, seed), off, opts(trial)));
      const GradCheckProblem masked{
          [trial](ParamStore&, const Tensor& in) {
            CounterRng rng(trial, 3);
            return dropout(in, 0.3, Mode::train, rng, nullptr);
          },
          [trial](ParamStore&, const Tensor& in, const Tensor& dy) {
            CounterRng rng(trial, 3);
            DropoutCache c;
            dropout(in, 0.3, Mode::train, rng, &c);
            return dropout_backward(std::move(c), dy);
          }};
      record("dropout_fixed_mask",
             gradient_check(none, random_tensor({3, 4}, seed), masked, opts(trial)));
    }
    {
      Tensor x = random_tensor({3, 4}, 600 + seed, -2.0, 2.0);
      for (auto& v : x.data()) {
        if (std::abs(v) < 0.1) v = v < 0 ? -0.5 : 0.5;
      }
      ParamStore none;
      const GradCheckProblem relu{
          [](ParamStore&, const Tensor& in) { return act::relu(in); },
          [](ParamStore&, const Tensor& in, const Tensor& dy) { return act::relu_backward(in, dy); }};
      const GradCheckProblem sig{
          [](ParamStore&, const Tensor& in) { return act::sigmoid(in); },
          [](ParamStore&, const Tensor& in, const Tensor& dy) {
            return act::sigmoid_backward(act::sigmoid(in), dy);
          }};
      const GradCheckProblem th{
          [](ParamStore&, const Tensor& in) { return act::tanh(in); },
          [](ParamStore&, const Tensor& in, const Tensor& dy) {
            return act::tanh_backward(act::tanh(in), dy);
          }};
      record("relu", gradient_check(none, x, relu, opts(trial)));
      record("sigmoid", gradient_check(none, x, sig, opts(trial)));
      record("tanh", gradient_check(none, x, th, opts(trial)));
    }
    {
      ModelConfig c;
      c.input_dim = 4;
      c.seq_len = 3;
      c.hidden = 4;
      c.heads = 2;
      c.predictor_dims = {5, 4, 3, 1};
      c.dropout = 0.1;
      c.attention_pick = static_cast<AttentionPick>(trial % 3);
      HybridoModel model = init_model(c, seed);
      randomize(model.params(), 700 + seed, 0.8);
      const Batch source{random_tensor({5, 3, 4}, 800 + seed), random_tensor({5, 1}, 900 + seed)};
      const Batch target{random_tensor({6, 3, 4}, 1000 + seed, -0.5, 1.5),
                         random_tensor({6, 1}, 1100 + seed)};
      const ForwardContext ctx{Mode::train, seed, seed, 0, nullptr};
      const Objective objective = trial % 4 == 3 ? Objective::hybridonet : Objective::adapt;
      const Bandwidth bw = Bandwidth::fixed(0.9);
      const GradCheckProblem p{
          [&](ParamStore&, const Tensor&) {
            HybridoModel copy = model;
            const auto b = total_loss(copy, &source, target, 0.6, ctx, objective, bw);
            return Tensor({1}, std::vector<double>{b.total});
          },
          [&](ParamStore& store, const Tensor&, const Tensor& dy) {
            total_loss(model, &source, target, 0.6, ctx, objective, bw);
            for (std::size_t q = 0; q < store.size(); ++q) store.grad(q) *= dy[0];
            return Tensor{};
          }};
      GradCheckOptions o = opts(trial);
      o.check_input = false;
      record("total_loss", gradient_check(model.params(), Tensor({1}), p, o));
    }
  }
  const double elapsed = seconds_since(t0);
  bool ok = elapsed < 60.0;
  std::ostringstream d;
  double max_err = 0.0;
  for (const auto& [family, v] : worst) {
    ok = ok && v.first >= kInstances && v.second <= tol;
    max_err = std::max(max_err, v.second);
    d << family << "=" << fmt(v.second, 2) << " ";
  }
  return verdict(ok, std::to_string(worst.size()) + " families x " + std::to_string(kInstances) +
                         " instances, max rel err " + fmt(max_err, 3) + " (tol 1e-4), " +
                         fmt(elapsed, 3) + " s (limit 60) [" + d.str() + "]");
}

// ------------------------------------------------------------------ NODE

double node_scalar(std::size_t steps) {
  ParamStore s;
  NodeBlock node(s, "n", 1, steps, 0);
  s.value(node.weight_index())[0] = 1.0;
  s.value(node.bias_index())[0] = 0.0;
  return node.forward(s, Tensor({1, 1}, std::vector<double>{1.0}), nullptr)[0];
}

Outcome node_order(const Options&) {
  const double e = std::numbers::e;
  const double two = node_scalar(2), four = node_scalar(4);
  const double err2 = std::abs(two - e), err4 = std::abs(four - e);
  const double ratio = err2 / err4;
  const bool ok = std::abs(two - 2.71734619) < 1e-8 && ratio >= 12.0 && ratio <= 20.0;
  return verdict(ok, "2-step RK4 = " + fmt(two, 12) + ", |err| = " + fmt(err2, 6) +
                         ", halving ratio = " + fmt(ratio, 5) + " (want [12, 20])");
}

// ------------------------------------------------------------------- MMD

Outcome mmd_properties(const Options&) {
  double self = 0.0, asym = 0.0, lowest = 1.0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const std::size_t n = 1 + s % 9, m = 1 + (s / 9) % 7, d = 1 + s % 5;
    const Tensor f = random_tensor({n, d}, 2 * s);
    const Tensor g = random_tensor({m, d}, 2 * s + 1, -0.5, 1.5);
    const double fg = mmd_loss(f, g, {}, false).value;
    const double gf = mmd_loss(g, f, {}, false).value;
    self = std::max(self, std::abs(mmd_loss(f, f, {}, false).value));
    asym = std::max(asym, std::abs(fg - gf));
    lowest = std::min(lowest, fg);
  }
  const double sigma = 1.3;
  const Tensor a({1, 3}, std::vector<double>{0.0, 0.0, 0.0});
  const Tensor b({1, 3}, std::vector<double>{sigma, sigma, 0.0});
  const double closed = mmd_loss(a, b, Bandwidth::fixed(sigma), false).value;
  const double expected = 2.0 - 2.0 * std::exp(-1.0);
  const bool ok = self < 1e-12 && asym < 1e-12 && lowest >= -1e-12 &&
                  std::abs(closed - expected) < 1e-12;
  return verdict(ok, "max |MMD(F,F)| = " + fmt(self, 3) + ", max asymmetry = " + fmt(asym, 3) +
                         ", min over 1000 pairs = " + fmt(lowest, 3) + ", single pair = " +
                         fmt(closed, 11) + " vs 2-2/e = " + fmt(expected, 11));
}

Outcome lambda_values(const Options&) {
  const double want[3] = {0.0, 0.9866142981, 0.9999092043};
  const double got[3] = {lambda_schedule(0, 10), lambda_schedule(5, 10), lambda_schedule(10, 10)};
  double err = 0.0;
  for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(got[i] - want[i]));
  bool monotone = true;
  for (int e = 1; e <= 100; ++e) {
    monotone = monotone && lambda_schedule(e, 100) >= lambda_schedule(e - 1, 100) &&
               lambda_schedule(e, 100) < 1.0;
  }
  return verdict(err < 1e-9 && monotone,
                 "values " + fmt(got[0], 10) + ", " + fmt(got[1], 10) + ", " + fmt(got[2], 10) +
                     ", max err " + fmt(err, 3) + (monotone ? ", monotone" : ", NOT monotone"));
}

// -------------------------------------------------------------- pipeline

Outcome pipeline_shape(const Options&) {
  SynthCorpusParams p;
  p.cells = 40;
  const auto cells = generate_corpus(1, p);
  const PreprocessConfig cfg;
  std::vector<SampleWindow> all;
  std::size_t bad = 0;
  for (const auto& cell : cells) {
    const LifeLabel life = compute_cycle_life(cell, cfg.eol_threshold);
    const WindowBuild w = build_sample_windows(cell, life, cfg);
    if (w.windows.size() != static_cast<std::size_t>(life.cycle_life - 29)) ++bad;
    all.insert(all.end(), w.windows.begin(), w.windows.end());
  }
  const Tensor t = assemble_feature_tensor(all);
  const bool shape_ok = t.shape() == Shape{all.size(), 10, 3, 6};
  const ModelInput in = to_model_input(all, fit_minmax_scaler(all));
  const bool model_ok = in.x.shape() == Shape{all.size(), 10, 18};
  return verdict(shape_ok && model_ok && bad == 0 && !all.empty(),
                 "40 cells -> tensor " + shape_str(t.shape()) + ", " + std::to_string(bad) +
                     " cells with window count != cycle_life - 29");
}

// ----------------------------------------------------------- experiments

std::vector<CellRecord> corpus(std::uint64_t seed, std::size_t cells, double knee, double noise,
                               const std::string& prefix) {
  SynthCorpusParams p;
  p.cells = cells;
  p.life_min = 100;
  p.life_max = 200;
  p.id_prefix = prefix;
  p.base.knee = knee;
  p.base.noise = noise;
  return generate_corpus(seed, p);
}

TrainConfig experiment_config(std::size_t epochs, std::uint64_t seed) {
  TrainConfig c;
  c.epochs = epochs;
  c.runs = 1;
  c.seed = seed;
  c.threads = 1;
  c.split = SplitLevel::cell;
  c.val_fraction = 0.2;
  return c;
}

Outcome median_filter_benefit(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t wins = 0;
  std::ostringstream d;
  for (std::size_t s = 0; s < o.seeds; ++s) {
    const auto cells = corpus(100 + s, o.median_cells, 1.5, 0.01, "mf");
    double rmse[2];
    for (int filtered = 0; filtered < 2; ++filtered) {
      PreprocessConfig pc;
      pc.kernel = filtered ? 5 : 1;
      TrainData data;
      data.target = build_corpus_windows(cells, pc);
      TrainConfig tc = experiment_config(o.median_epochs, s);
      tc.mode = TrainMode::hybridonet;
      rmse[filtered] = train_run(data, tc, s).report.best_val_rmse;
    }
    wins += rmse[1] <= rmse[0];
    if (o.verbose) {
      std::cerr << "  median seed " << s << ": filtered " << rmse[1] << " unfiltered " << rmse[0]
                << '\n';
    }
    d << fmt(rmse[1], 3) << "/" << fmt(rmse[0], 3) << " ";
  }
  const double elapsed = seconds_since(t0);
  const std::size_t need = (7 * o.seeds + 9) / 10;
  return verdict(wins >= need && elapsed < 900.0,
                 "filtered <= unfiltered val RMSE on " + std::to_string(wins) + "/" +
                     std::to_string(o.seeds) + " seeds (need " + std::to_string(need) + "), " +
                     fmt(elapsed, 3) + " s (limit 900) [filtered/unfiltered: " + d.str() + "]");
}

Outcome da_benefit(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t wins = 0;
  std::ostringstream d;
  const PreprocessConfig pc;
  for (std::size_t s = 0; s < o.seeds; ++s) {
    TrainData data;
    data.source = build_corpus_windows(corpus(200 + s, o.da_source_cells, 1.2, 0.002, "src"), pc);
    data.target = build_corpus_windows(corpus(300 + s, o.da_target_cells, 2.0, 0.002, "tgt"), pc);
    const auto test = corpus(400 + s, o.da_test_cells, 2.0, 0.002, "test");
    double rmse[2];
    for (int adapt = 0; adapt < 2; ++adapt) {
      TrainConfig tc = experiment_config(o.da_epochs, s);
      tc.mode = adapt ? TrainMode::hybridonet_adapt : TrainMode::hybridonet;
      const RunResult r = train_run(data, tc, s);
      rmse[adapt] = evaluate_cells(r.model, test, *r.model.scaler, pc).rmse_cycles;
    }
    wins += rmse[1] <= rmse[0];
    if (o.verbose) {
      std::cerr << "  da seed " << s << ": adapt " << rmse[1] << " hybridonet " << rmse[0] << '\n';
    }
    d << fmt(rmse[1], 3) << "/" << fmt(rmse[0], 3) << " ";
  }
  const double elapsed = seconds_since(t0);
  const std::size_t need = (7 * o.seeds + 9) / 10;
  return verdict(wins >= need && elapsed < 1800.0,
                 "adapt <= hybridonet test RMSE on " + std::to_string(wins) + "/" +
                     std::to_string(o.seeds) + " seeds (need " + std::to_string(need) + "), " +
                     fmt(elapsed, 3) + " s (limit 1800) [adapt/hybridonet: " + d.str() + "]");
}

// ------------------------------------------------- determinism, persistence

std::vector<std::uint64_t> bits(const HybridoModel& m) {
  std::vector<std::uint64_t> out;
  for (const auto& p : m.params().entries()) {
    for (double v : p.value.data()) {
      std::uint64_t b;
      std::memcpy(&b, &v, sizeof b);
      out.push_back(b);
    }
  }
  return out;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

Outcome determinism_persistence(const Options&) {
  const PreprocessConfig pc;
  TrainData data;
  data.source = build_corpus_windows(corpus(11, 3, 1.2, 0.002, "src"), pc);
  data.target = build_corpus_windows(corpus(12, 3, 2.0, 0.002, "tgt"), pc);
  TrainConfig tc = experiment_config(2, 5);
  tc.batch_size = 64;

  const RunResult a = train_run(data, tc, 5);
  const RunResult b = train_run(data, tc, 5);
  bool steps_equal = a.report.step_losses.size() == b.report.step_losses.size();
  for (std::size_t i = 0; steps_equal && i < a.report.step_losses.size(); ++i) {
    const auto& x = a.report.step_losses[i];
    const auto& y = b.report.step_losses[i];
    steps_equal = same_bits(x.total, y.total) && same_bits(x.mmd, y.mmd) &&
                  same_bits(x.mse_source, y.mse_source) && same_bits(x.mse_target, y.mse_target);
  }
  const bool params_equal = bits(a.model) == bits(b.model);

  const fs::path dir = fs::temp_directory_path() / ("rulnet-acceptance-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  fs::create_directories(dir);
  save_checkpoint(a.model, dir / "m.ckpt");
  const HybridoModel loaded = load_checkpoint(dir / "m.ckpt");
  const bool ckpt_equal = bits(loaded) == bits(a.model) && loaded.scaler == a.model.scaler &&
                          loaded.config() == a.model.config();

  tc.runs = 1;
  const EnsembleResult ens = train_ensemble(data, tc, {}, dir / "ens");
  const Ensemble reloaded = load_ensemble(dir / "ens");
  const auto member = predict_rul(a.model, data.target);
  const bool ens_equal = ens.ensemble.members.size() == 1 &&
                         bits(ens.ensemble.members[0]) == bits(a.model) &&
                         ens.ensemble.predict(data.target) == member &&
                         reloaded.predict(data.target) == member;
  fs::remove_all(dir);

  auto yn = [](bool v) { return v ? "yes" : "NO"; };
  return verdict(steps_equal && params_equal && ckpt_equal && ens_equal,
                 std::string("bitwise step losses: ") + yn(steps_equal) + " (" +
                     std::to_string(a.report.step_losses.size()) + " steps), final params: " +
                     yn(params_equal) + ", checkpoint round trip: " + yn(ckpt_equal) +
                     ", ensemble of 1 == member: " + yn(ens_equal));
}

// ------------------------------------------------------ full reproduction

Outcome full_reproduction(const Options&) {
  const char* source = std::getenv("RULNET_REPRO_SOURCE");
  const char* train = std::getenv("RULNET_REPRO_TARGET_TRAIN");
  const char* test = std::getenv("RULNET_REPRO_TARGET_TEST");
  if (!source || !train || !test) {
    return {Outcome::Status::skip,
            "needs converted TRI/LHP cell directories; set RULNET_REPRO_SOURCE, "
            "RULNET_REPRO_TARGET_TRAIN and RULNET_REPRO_TARGET_TEST"};
  }
  const PreprocessConfig pc;
  TrainData data;
  data.source = build_corpus_windows(load_corpus(source), pc);
  data.target = build_corpus_windows(load_corpus(train), pc);
  const TrainConfig tc;
  const EnsembleResult ens = train_ensemble(data, tc);
  const EvalReport r = evaluate_cells(ens.ensemble, load_corpus(test), pc);
  auto within = [](double got, double want) { return std::abs(got - want) <= 0.2 * want; };
  const double r2 = r.r2.value_or(std::nan(""));
  const bool ok = within(r.rmse_cycles, 153.24) && within(r2, 0.88) &&
                  within(r.mape_percent, 7.30);
  return verdict(ok, "RMSE " + fmt(r.rmse_cycles) + " (153.24), R2 " + fmt(r2) +
                         " (0.88), MAPE " + fmt(r.mape_percent) + " (7.30), +-20%");
}

struct Criterion {
  std::string name;
  std::function<Outcome(const Options&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance gate"};
  Options o;
  std::string only;
  app.add_option("--only", only, "run a single criterion");
  app.add_option("--seeds", o.seeds, "seeds for the experimental criteria")->capture_default_str();
  app.add_option("--median-epochs", o.median_epochs)->capture_default_str();
  app.add_option("--median-cells", o.median_cells)->capture_default_str();
  app.add_option("--da-epochs", o.da_epochs)->capture_default_str();
  app.add_option("--da-source-cells", o.da_source_cells)->capture_default_str();
  app.add_option("--da-target-cells", o.da_target_cells)->capture_default_str();
  app.add_option("--da-test-cells", o.da_test_cells)->capture_default_str();
  app.add_flag("--verbose", o.verbose, "per-seed progress on stderr");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {"gradient_suite", gradient_suite},
      {"node_order", node_order},
      {"mmd_properties", mmd_properties},
      {"lambda_schedule", lambda_values},
      {"pipeline_shape", pipeline_shape},
      {"median_filter_benefit", median_filter_benefit},
      {"da_benefit", da_benefit},
      {"determinism_persistence", determinism_persistence},
      {"full_reproduction", full_reproduction},
  };
  bool any_fail = false, any_run = false, known = only.empty();
  for (const auto& c : criteria) {
    if (!only.empty() && c.name != only) continue;
    known = true;
    Outcome out;
    try {
      out = c.run(o);
    } catch (const std::exception& e) {
      out = {Outcome::Status::fail, std::string("threw: ") + e.what()};
    }
    const char* tag = out.status == Outcome::Status::pass   ? "PASS"
                      : out.status == Outcome::Status::skip ? "SKIP"
                                                            : "FAIL";
    std::cout << tag << " " << c.name << ": " << out.detail << std::endl;
    any_fail = any_fail || out.status == Outcome::Status::fail;
    any_run = any_run || out.status != Outcome::Status::skip;
  }
  if (!known) {
    std::cerr << "unknown criterion: " << only << '\n';
    return 2;
  }
  if (any_fail) return 1;
  return any_run ? 0 : 77;
}
