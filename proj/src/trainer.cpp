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

#include "rulnet/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "rulnet/checkpoint.hpp"
#include "rulnet/error.hpp"
#include "rulnet/eval.hpp"
#include "rulnet/rng.hpp"

namespace rulnet {

const char* to_string(TrainMode mode) {
  return mode == TrainMode::hybridonet ? "hybridonet" : "hybridonet_adapt";
}

TrainMode train_mode_from_string(std::string_view s) {
  if (s == "hybridonet") return TrainMode::hybridonet;
  if (s == "hybridonet_adapt" || s == "adapt") return TrainMode::hybridonet_adapt;
  throw ConfigError("mode must be hybridonet or hybridonet_adapt (got '" + std::string(s) + "')");
}

const char* to_string(SplitLevel level) { return level == SplitLevel::window ? "window" : "cell"; }

SplitLevel split_level_from_string(std::string_view s) {
  if (s == "window") return SplitLevel::window;
  if (s == "cell") return SplitLevel::cell;
  throw ConfigError("split must be window or cell (got '" + std::string(s) + "')");
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  optimizer.validate();
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ConfigError("val_fraction must be in (0, 1)");
  }
  if (runs == 0) throw ConfigError("runs must be >= 1");
  if (bandwidth.policy == Bandwidth::Policy::fixed && !(bandwidth.sigma > 0.0)) {
    throw ConfigError("mmd_sigma must be positive");
  }
}

nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j = {
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"learning_rate", c.optimizer.learning_rate},
      {"weight_decay", c.optimizer.weight_decay},
      {"betas", {c.optimizer.beta1, c.optimizer.beta2}},
      {"eps", c.optimizer.eps},
      {"val_fraction", c.val_fraction},
      {"runs", c.runs},
      {"seed", c.seed},
      {"mode", to_string(c.mode)},
      {"split", to_string(c.split)},
      {"mmd_bandwidth", c.bandwidth.policy == Bandwidth::Policy::median ? "median" : "fixed"},
      {"mmd_sigma", c.bandwidth.sigma},
      {"lambda_override", c.lambda_override ? nlohmann::json(*c.lambda_override) : nullptr},
      {"fixed_thetas", c.fixed_thetas ? nlohmann::json(*c.fixed_thetas) : nullptr},
      {"threads", c.threads}};
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "learning_rate") c.optimizer.learning_rate = v.get<double>();
      else if (key == "weight_decay") c.optimizer.weight_decay = v.get<double>();
      else if (key == "betas") {
        const auto b = v.get<std::vector<double>>();
        if (b.size() != 2) throw ConfigError("betas must hold two numbers");
        c.optimizer.beta1 = b[0];
        c.optimizer.beta2 = b[1];
      } else if (key == "eps") c.optimizer.eps = v.get<double>();
      else if (key == "val_fraction") c.val_fraction = v.get<double>();
      else if (key == "runs") c.runs = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "mode") c.mode = train_mode_from_string(v.get<std::string>());
      else if (key == "split") c.split = split_level_from_string(v.get<std::string>());
      else if (key == "mmd_bandwidth") {
        const auto s = v.get<std::string>();
        if (s == "median") c.bandwidth.policy = Bandwidth::Policy::median;
        else if (s == "fixed") c.bandwidth.policy = Bandwidth::Policy::fixed;
        else throw ConfigError("mmd_bandwidth must be median or fixed");
      } else if (key == "mmd_sigma") c.bandwidth.sigma = v.get<double>();
      else if (key == "lambda_override") {
        if (v.is_null()) c.lambda_override.reset();
        else c.lambda_override = v.get<double>();
      } else if (key == "fixed_thetas") {
        if (v.is_null()) c.fixed_thetas.reset();
        else c.fixed_thetas = v.get<std::array<double, 2>>();
      } else if (key == "threads") c.threads = v.get<std::size_t>();
      else throw ConfigError("unknown train config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

Split split_train_val(std::span<const SampleWindow> samples, double val_fraction,
                      std::uint64_t seed, SplitLevel level) {
  if (samples.size() < 2) throw DataError("split_train_val: need at least 2 samples");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ConfigError("split_train_val: val_fraction must be in (0, 1)");
  }
  const std::size_t n = samples.size();
  const std::size_t n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * val_fraction)), 1, n - 1);
  std::vector<bool> to_val(n, false);

  if (level == SplitLevel::window) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    CounterRng rng(seed, stream_id("split.window"));
    shuffle(order, rng);
    for (std::size_t i = 0; i < n_val; ++i) to_val[order[i]] = true;
  } else {
    std::map<std::string, std::vector<std::size_t>> by_cell;
    for (std::size_t i = 0; i < n; ++i) by_cell[samples[i].cell_id].push_back(i);
    if (by_cell.size() < 2) throw DataError("split_train_val: cell-level split needs >= 2 cells");
    std::vector<std::string> cells;
    for (const auto& [id, _] : by_cell) cells.push_back(id);
    CounterRng rng(seed, stream_id("split.cell"));
    shuffle(cells, rng);
    std::size_t taken = 0;
    for (std::size_t c = 0; c + 1 < cells.size() && taken < n_val; ++c) {
      for (std::size_t i : by_cell[cells[c]]) to_val[i] = true;
      taken += by_cell[cells[c]].size();
    }
  }
  Split s;
  for (std::size_t i = 0; i < n; ++i) (to_val[i] ? s.val : s.train).push_back(samples[i]);
  return s;
}

nlohmann::json to_json(const EpochRecord& e) {
  return {{"run", e.run},
          {"epoch", e.epoch},
          {"steps", e.steps},
          {"mse_source", e.mean.mse_source},
          {"mse_target", e.mean.mse_target},
          {"mmd", e.mean.mmd},
          {"lambda", e.mean.lambda},
          {"total", e.mean.total},
          {"val_rmse", e.val_rmse},
          {"seconds", e.seconds}};
}

nlohmann::json to_json(const RunReport& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs) epochs.push_back(to_json(e));
  return {{"run", r.run},
          {"seed", r.seed},
          {"epochs", std::move(epochs)},
          {"best_val_rmse", r.best_val_rmse},
          {"best_epoch", r.best_epoch},
          {"checkpoint", r.checkpoint_path},
          {"wall_seconds", r.wall_seconds},
          {"failed", r.failed},
          {"error", r.error}};
}

void write_jsonl(const RunReport& report, std::ostream& out) {
  for (const auto& e : report.epochs) {
    nlohmann::json j = to_json(e);
    j["seed"] = report.seed;
    out << j.dump() << '\n';
  }
}

namespace {

// Walks a stream in shuffled order; every wrap reshuffles from a fresh
// counter stream so the order depends only on (seed, name, epoch, wrap).
class StreamCursor {
 public:
  StreamCursor(std::size_t size, std::uint64_t seed, std::string_view name, std::size_t epoch)
      : order_(size), seed_(seed), stream_(stream_id(name)), epoch_(epoch) {
    reshuffle();
  }

  std::vector<std::size_t> take(std::size_t count) {
    std::vector<std::size_t> out;
    out.reserve(count);
    while (out.size() < count) {
      if (pos_ == order_.size()) {
        ++wrap_;
        reshuffle();
      }
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    CounterRng rng(seed_, stream_ ^ CounterRng::mix((epoch_ << 20) + wrap_));
    shuffle(order_, rng);
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::size_t epoch_;
  std::size_t wrap_ = 0;
  std::size_t pos_ = 0;
};

Batch gather(const ModelInput& input, const std::vector<std::size_t>& rows) {
  const std::size_t stride = input.x.size() / input.x.dim(0);
  Shape shape = input.x.shape();
  shape[0] = rows.size();
  Batch b{Tensor(shape), Tensor({rows.size(), 1})};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(input.x.ptr() + rows[r] * stride, stride, b.x.ptr() + r * stride);
    b.y[r] = input.y[rows[r]];
  }
  return b;
}

bool finite(const LossBreakdown& l) {
  return std::isfinite(l.mse_source) && std::isfinite(l.mse_target) && std::isfinite(l.mmd) &&
         std::isfinite(l.total);
}

std::vector<double> observed_rul(std::span<const SampleWindow> windows) {
  std::vector<double> y;
  y.reserve(windows.size());
  for (const auto& w : windows) y.push_back(static_cast<double>(w.rul_label));
  return y;
}

}  // namespace

RunResult train_run(const TrainData& data, const TrainConfig& config, std::uint64_t seed,
                    const ModelConfig& model_config, std::size_t run_index) {
  config.validate();
  const auto t_start = std::chrono::steady_clock::now();
  if (data.target.empty()) throw DataError("train_run: empty target stream");
  const bool adapt = config.mode == TrainMode::hybridonet_adapt;
  const bool use_source = adapt && !data.source.empty();

  const ScalerParams target_scaler = fit_minmax_scaler(data.target);
  const Split split = split_train_val(data.target, config.val_fraction, seed, config.split);
  const ModelInput target_in = to_model_input(split.train, target_scaler);
  ModelInput source_in;
  if (use_source) source_in = to_model_input(data.source, fit_minmax_scaler(data.source));
  const std::vector<double> val_observed = observed_rul(split.val);

  HybridoModel model(model_config, seed);
  model.scaler = target_scaler;
  if (!adapt) {
    model.set_thetas(0.0, 1.0);
    model.freeze_thetas(true);
  } else if (config.fixed_thetas) {
    model.set_thetas((*config.fixed_thetas)[0], (*config.fixed_thetas)[1]);
    model.freeze_thetas(true);
  }
  const Objective objective = adapt ? Objective::adapt : Objective::hybridonet;

  AdamWState opt_state = AdamWState::for_store(model.params());
  RunResult result;
  RunReport& report = result.report;
  report.run = run_index;
  report.seed = seed;

  const std::size_t n_target = target_in.x.dim(0);
  const std::size_t n_source = use_source ? source_in.x.dim(0) : 0;
  const std::size_t n_lead = std::max(n_target, n_source);
  std::uint64_t step = 0;
  std::vector<RunningStatUpdate> updates;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t_epoch = std::chrono::steady_clock::now();
    const double lambda = !adapt ? 0.0
                          : config.lambda_override
                              ? *config.lambda_override
                              : lambda_schedule(static_cast<double>(epoch),
                                                static_cast<double>(config.epochs));
    StreamCursor target_cursor(n_target, seed, "trainer.target", epoch);
    std::optional<StreamCursor> source_cursor;
    if (use_source) source_cursor.emplace(n_source, seed, "trainer.source", epoch);

    EpochRecord rec;
    rec.run = run_index;
    rec.epoch = epoch;
    rec.mean.lambda = lambda;
    for (std::size_t begin = 0; begin < n_lead; begin += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, n_lead - begin);
      if (count < 2) break;
      const Batch bt = gather(target_in, target_cursor.take(count));
      std::optional<Batch> bs;
      if (source_cursor) bs = gather(source_in, source_cursor->take(count));

      model.params().zero_grad();
      updates.clear();
      const ForwardContext ctx{Mode::train, seed, step, 0, &updates};
      const LossBreakdown loss =
          total_loss(model, bs ? &*bs : nullptr, bt, lambda, ctx, objective, config.bandwidth);
      if (!finite(loss)) {
        throw NumericalError("non-finite loss at run " + std::to_string(run_index) + " epoch " +
                             std::to_string(epoch) + " step " + std::to_string(step) +
                             " (mse_source=" + std::to_string(loss.mse_source) +
                             ", mse_target=" + std::to_string(loss.mse_target) +
                             ", mmd=" + std::to_string(loss.mmd) + ")");
      }
      ++step;
      adamw_step(model.params(), opt_state, config.optimizer, step);
      apply_running_stat_updates(model.params(), updates);

      report.step_losses.push_back(loss);
      rec.mean.mse_source += loss.mse_source;
      rec.mean.mse_target += loss.mse_target;
      rec.mean.mmd += loss.mmd;
      rec.mean.total += loss.total;
      ++rec.steps;
    }
    if (rec.steps > 0) {
      const double inv = 1.0 / static_cast<double>(rec.steps);
      rec.mean.mse_source *= inv;
      rec.mean.mse_target *= inv;
      rec.mean.mmd *= inv;
      rec.mean.total *= inv;
    }
    const std::vector<double> predicted = predict_rul(model, split.val, target_scaler);
    rec.val_rmse = rmse(val_observed, predicted);
    if (!std::isfinite(rec.val_rmse)) {
      throw NumericalError("non-finite validation RMSE at run " + std::to_string(run_index) +
                           " epoch " + std::to_string(epoch));
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_epoch).count();
    if (report.epochs.empty() || rec.val_rmse < report.best_val_rmse) {
      report.best_val_rmse = rec.val_rmse;
      report.best_epoch = epoch;
      result.model = model;
    }
    report.epochs.push_back(rec);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

EnsembleResult train_ensemble(const TrainData& data, const TrainConfig& config,
                              const ModelConfig& model_config,
                              const std::filesystem::path& out_dir) {
  config.validate();
  const std::size_t runs = config.runs;
  std::vector<std::optional<RunResult>> results(runs);
  std::vector<RunReport> failures(runs);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < runs; r = next++) {
      const std::uint64_t seed = config.seed + r;
      try {
        results[r] = train_run(data, config, seed, model_config, r);
      } catch (const std::exception& e) {
        failures[r].run = r;
        failures[r].seed = seed;
        failures[r].failed = true;
        failures[r].error = e.what();
      }
    }
  };
  std::size_t threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, runs);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  EnsembleResult out;
  out.manifest = {{"mode", to_string(config.mode)},
                  {"train_config", to_json(config)},
                  {"model_config", to_json(model_config)},
                  {"members", nlohmann::json::array()}};
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  for (std::size_t r = 0; r < runs; ++r) {
    if (!results[r]) {
      out.reports.push_back(failures[r]);
      continue;
    }
    RunResult& res = *results[r];
    if (!out_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "run_%02zu.ckpt", r);
      const auto path = out_dir / name;
      save_checkpoint(res.model, path,
                      {{"run", r}, {"seed", res.report.seed}, {"mode", to_string(config.mode)},
                       {"best_epoch", res.report.best_epoch},
                       {"best_val_rmse", res.report.best_val_rmse}});
      res.report.checkpoint_path = path.string();
      out.manifest["members"].push_back(
          {{"run", r}, {"seed", res.report.seed}, {"checkpoint", name},
           {"best_val_rmse", res.report.best_val_rmse}});
    }
    if (out.ensemble.members.empty()) out.ensemble.scaler = *res.model.scaler;
    out.ensemble.members.push_back(std::move(res.model));
    out.reports.push_back(std::move(res.report));
  }
  if (out.ensemble.members.empty()) {
    throw NumericalError("every ensemble member failed; first error: " + failures[0].error);
  }
  out.manifest["scaler"] = scaler_to_json(out.ensemble.scaler);
  out.manifest["survivors"] = out.ensemble.members.size();
  if (!out_dir.empty()) {
    std::ofstream f(out_dir / "ensemble.json");
    f << out.manifest.dump(2) << '\n';
    if (!f) throw DataError((out_dir / "ensemble.json").string() + ": write failed");
  }
  return out;
}

Ensemble load_ensemble(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "ensemble.json";
  std::ifstream f(manifest_path);
  if (!f) throw DataError(manifest_path.string() + ": missing ensemble manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  Ensemble ens;
  ens.scaler = scaler_from_json(manifest.at("scaler"));
  for (const auto& m : manifest.at("members")) {
    ens.members.push_back(load_checkpoint(dir / m.at("checkpoint").get<std::string>()));
  }
  if (ens.members.empty()) throw DataError(manifest_path.string() + ": no members");
  return ens;
}

}  // namespace rulnet
