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

#include "rulnet/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "rulnet/checkpoint.hpp"
#include "rulnet/cycle_data.hpp"
#include "rulnet/error.hpp"
#include "rulnet/eval.hpp"

namespace fs = std::filesystem;

namespace rulnet {

nlohmann::json to_json(const PreprocessConfig& c) {
  return {{"kernel", c.kernel},
          {"eol_threshold", c.eol_threshold},
          {"window_len", c.window_len},
          {"stride", c.stride}};
}

PreprocessConfig preprocess_config_from_json(const nlohmann::json& j, PreprocessConfig c) {
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "kernel") c.kernel = v.get<std::size_t>();
      else if (key == "eol_threshold") c.eol_threshold = v.get<double>();
      else if (key == "window_len") c.window_len = v.get<std::size_t>();
      else if (key == "stride") c.stride = v.get<std::size_t>();
      else throw ConfigError("unknown preprocess config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("preprocess config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const PipelineConfig& c) {
  return {{"model", to_json(c.model)},
          {"train", to_json(c.train)},
          {"preprocess", to_json(c.preprocess)},
          {"data", {{"source", c.source_dir}, {"target", c.target_dir}}}};
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "model") c.model = model_config_from_json(v);
    else if (key == "train") c.train = train_config_from_json(v);
    else if (key == "preprocess") c.preprocess = preprocess_config_from_json(v);
    else if (key == "data") {
      for (const auto& [dk, dv] : v.items()) {
        if (dk == "source") c.source_dir = dv.get<std::string>();
        else if (dk == "target") c.target_dir = dv.get<std::string>();
        else throw ConfigError("unknown data config key '" + dk + "'");
      }
    } else {
      throw ConfigError("unknown config section '" + key + "'");
    }
  }
  return c;
}

std::string config_key_reference() {
  return R"(Config file keys (JSON; flags override file values):
  model.input_dim        18              [reference: 3 signals x 6 statistics]
  model.seq_len          10              [reference: 10 of the last 30 cycles]
  model.hidden           64              [reference: LSTM hidden dimension]
  model.lstm_layers      2               [reference]
  model.heads            4               [chosen: head count not published]
  model.node_steps       2               [reference: NODE output time step]
  model.attention_pick   second_to_last  [reference; also last, mean]
  model.predictor_dims   [128,64,32,1]   [reference]
  model.dropout          0.1             [reference]
  train.epochs           10              [reference]
  train.batch_size       128             [reference]
  train.learning_rate    5e-4            [reference]
  train.weight_decay     1e-2            [chosen: not published]
  train.betas            [0.9,0.999]     [chosen: AdamW convention]
  train.eps              1e-8            [chosen: AdamW convention]
  train.val_fraction     0.1             [reference: 90/10 split]
  train.runs             10              [reference: 10-run average]
  train.seed             0               [chosen]
  train.mode             hybridonet_adapt [reference; or hybridonet]
  train.split            window          [chosen; or cell]
  train.mmd_bandwidth    median          [chosen: median heuristic; or fixed]
  train.mmd_sigma        1.0             [chosen: used when mmd_bandwidth = fixed]
  train.lambda_override  null            [chosen: null follows the lambda schedule]
  train.fixed_thetas     null            [chosen: null leaves theta trainable from 0.5]
  train.threads          0               [chosen: 0 = hardware concurrency]
  preprocess.kernel      5               [chosen: median filter width not published]
  preprocess.eol_threshold 0.8           [reference: 80% of nominal capacity]
  preprocess.window_len  10              [reference]
  preprocess.stride      3               [reference: one cycle every three]
  data.source            ""              [source-domain corpus directory]
  data.target            ""              [target-domain corpus directory]
)";
}

namespace {

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j, int indent = 2) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot write");
  out << j.dump(indent) << '\n';
  if (!out) throw DataError(path.string() + ": write failed");
}

std::vector<CellRecord> load_cells(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError(dir + ": not a directory");
  auto cells = load_corpus(dir);
  if (cells.empty()) throw DataError(dir + ": no cell directories (meta.json) found");
  return cells;
}

// A trained model: an ensemble directory, or a single checkpoint file.
struct LoadedModel {
  Ensemble ensemble;
  std::optional<PreprocessConfig> preprocess;
};

LoadedModel load_model(const std::string& path) {
  LoadedModel m;
  if (fs::is_directory(path)) {
    m.ensemble = load_ensemble(path);
    const fs::path pipeline = fs::path(path) / "pipeline.json";
    if (fs::exists(pipeline)) {
      m.preprocess = preprocess_config_from_json(read_json(pipeline).at("preprocess"));
    }
  } else {
    HybridoModel model = load_checkpoint(path);
    if (!model.scaler) throw DataError(path + ": checkpoint has no scaler");
    m.ensemble.scaler = *model.scaler;
    m.ensemble.members.push_back(std::move(model));
  }
  return m;
}

// Preprocessing options shared by several subcommands.
struct PreprocessFlags {
  std::size_t kernel = 0;
  double eol_threshold = 0.0;
  std::size_t window_len = 0;
  std::size_t stride = 0;
  CLI::Option* o_kernel = nullptr;
  CLI::Option* o_eol = nullptr;
  CLI::Option* o_window = nullptr;
  CLI::Option* o_stride = nullptr;

  void add(CLI::App* app) {
    o_kernel = app->add_option("--kernel", kernel, "median filter width (odd)");
    o_eol = app->add_option("--eol-threshold", eol_threshold, "EOL capacity fraction");
    o_window = app->add_option("--window-len", window_len, "cycles per window");
    o_stride = app->add_option("--stride", stride, "spacing of sampled cycles");
  }
  void apply(PreprocessConfig& c) const {
    if (o_kernel->count()) c.kernel = kernel;
    if (o_eol->count()) c.eol_threshold = eol_threshold;
    if (o_window->count()) c.window_len = window_len;
    if (o_stride->count()) c.stride = stride;
    c.validate();
  }
};

nlohmann::json window_to_json(const SampleWindow& w) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& m : w.features) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& ch : m) {
      for (double v : ch) row.push_back(v);
    }
    features.push_back(std::move(row));
  }
  return {{"cell_id", w.cell_id},
          {"anchor_cycle", w.anchor_cycle},
          {"rul_label", w.rul_label},
          {"features", std::move(features)}};
}

std::vector<SampleWindow> corpus_windows(const std::string& dir, const PreprocessConfig& pre,
                                         std::ostream& err) {
  const auto cells = load_cells(dir);
  std::vector<SampleWindow> all;
  for (const auto& cell : cells) {
    const LifeLabel life = compute_cycle_life(cell, pre.eol_threshold);
    WindowBuild b = build_sample_windows(cell, life, pre);
    if (b.too_short) {
      err << "warning: " << cell.cell_id << " has too few labeled cycles for a window\n";
    }
    for (auto& w : b.windows) all.push_back(std::move(w));
  }
  if (all.empty()) throw DataError(dir + ": corpus yields no windows");
  return all;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Remaining-useful-life prediction for lithium-ion cells"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer(config_key_reference());
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (see keys below)");

  // synth
  auto* synth = app.add_subcommand("synth", "write synthetic canonical cell directories");
  std::size_t synth_cells = 20;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  SynthCorpusParams corpus;
  synth->add_option("--cells", synth_cells, "number of cells")->capture_default_str();
  synth->add_option("--seed", synth_seed, "random seed")->capture_default_str();
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--life-min", corpus.life_min, "smallest target cycle life")->capture_default_str();
  synth->add_option("--life-max", corpus.life_max, "largest target cycle life")->capture_default_str();
  synth->add_option("--knee", corpus.base.knee, "fade exponent beta >= 1")->capture_default_str();
  synth->add_option("--noise", corpus.base.noise, "noise amplitude as a fraction of nominal")
      ->capture_default_str();
  synth->add_option("--nominal", corpus.base.nominal_capacity_ah, "nominal capacity (Ah)")
      ->capture_default_str();
  synth->add_option("--samples", corpus.base.samples_per_cycle, "samples per cycle")
      ->capture_default_str();
  synth->add_option("--prefix", corpus.id_prefix, "cell id prefix")->capture_default_str();
  synth->add_option("--protocol", corpus.base.protocol, "protocol label")->capture_default_str();

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "build windows and fit a scaler");
  std::string pre_data, pre_out;
  PreprocessFlags pre_flags;
  pre->add_option("--data", pre_data, "corpus directory")->required();
  pre->add_option("--out", pre_out, "output JSON file")->required();
  pre_flags.add(pre);

  // train
  auto* train = app.add_subcommand("train", "train an ensemble");
  std::string train_mode, train_source, train_target, train_out;
  std::size_t t_epochs = 0, t_batch = 0, t_runs = 0, t_threads = 0;
  double t_lr = 0, t_wd = 0, t_val = 0;
  std::uint64_t t_seed = 0;
  std::string t_split;
  PreprocessFlags train_pre;
  auto* o_mode = train->add_option("--mode", train_mode, "hybridonet or adapt")
                     ->check(CLI::IsMember({"hybridonet", "adapt", "hybridonet_adapt"}));
  auto* o_source = train->add_option("--source", train_source, "source-domain corpus");
  auto* o_target = train->add_option("--target", train_target, "target-domain corpus");
  train->add_option("--out", train_out, "output directory")->required();
  auto* o_epochs = train->add_option("--epochs", t_epochs, "epochs");
  auto* o_batch = train->add_option("--batch-size", t_batch, "batch size");
  auto* o_lr = train->add_option("--lr", t_lr, "learning rate");
  auto* o_wd = train->add_option("--weight-decay", t_wd, "AdamW weight decay");
  auto* o_runs = train->add_option("--runs", t_runs, "ensemble members");
  auto* o_seed = train->add_option("--seed", t_seed, "base seed");
  auto* o_val = train->add_option("--val-fraction", t_val, "validation fraction");
  auto* o_split = train->add_option("--split", t_split, "window or cell")
                      ->check(CLI::IsMember({"window", "cell"}));
  auto* o_threads = train->add_option("--threads", t_threads, "worker threads (0 = all)");
  train_pre.add(train);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a trained model on cells");
  std::string ev_model, ev_data, ev_out, ev_traces;
  PreprocessFlags ev_pre;
  evaluate->add_option("--model", ev_model, "ensemble directory or checkpoint")->required();
  evaluate->add_option("--data", ev_data, "corpus directory")->required();
  evaluate->add_option("--out", ev_out, "report JSON path")->required();
  evaluate->add_option("--traces", ev_traces, "optional trace CSV path");
  ev_pre.add(evaluate);

  // predict
  auto* predict = app.add_subcommand("predict", "print per-anchor predicted RUL for one cell");
  std::string pr_model, pr_cell;
  PreprocessFlags pr_pre;
  predict->add_option("--model", pr_model, "ensemble directory or checkpoint")->required();
  predict->add_option("--cell", pr_cell, "cell directory")->required();
  pr_pre.add(predict);

  // export-embeddings
  auto* embed = app.add_subcommand("export-embeddings", "write feature-extractor outputs");
  std::string em_model, em_target, em_source, em_out;
  std::size_t em_member = 0;
  PreprocessFlags em_pre;
  embed->add_option("--model", em_model, "ensemble directory or checkpoint")->required();
  embed->add_option("--target", em_target, "target-domain corpus")->required();
  embed->add_option("--source", em_source, "source-domain corpus");
  embed->add_option("--out", em_out, "CSV path")->required();
  embed->add_option("--member", em_member, "ensemble member index")->capture_default_str();
  em_pre.add(embed);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    PipelineConfig config;
    if (!config_path.empty()) config = pipeline_config_from_json(read_json(config_path));

    if (synth->parsed()) {
      corpus.cells = synth_cells;
      const auto cells = generate_corpus(synth_seed, corpus);
      fs::create_directories(synth_out);
      for (const auto& cell : cells) write_cell(cell, fs::path(synth_out) / cell.cell_id);
      out << nlohmann::json{{"cells", cells.size()}, {"out", synth_out}}.dump() << '\n';
      return exit_ok;
    }

    if (pre->parsed()) {
      pre_flags.apply(config.preprocess);
      const auto windows = corpus_windows(pre_data, config.preprocess, err);
      nlohmann::json j;
      j["preprocess"] = to_json(config.preprocess);
      j["scaler"] = scaler_to_json(fit_minmax_scaler(windows));
      j["shape"] = {windows.size(), config.preprocess.window_len, kChannels, kStats};
      j["windows"] = nlohmann::json::array();
      for (const auto& w : windows) j["windows"].push_back(window_to_json(w));
      write_json(pre_out, j, -1);
      out << nlohmann::json{{"windows", windows.size()}, {"out", pre_out}}.dump() << '\n';
      return exit_ok;
    }

    if (train->parsed()) {
      if (o_mode->count()) config.train.mode = train_mode_from_string(train_mode);
      if (o_source->count()) config.source_dir = train_source;
      if (o_target->count()) config.target_dir = train_target;
      if (o_epochs->count()) config.train.epochs = t_epochs;
      if (o_batch->count()) config.train.batch_size = t_batch;
      if (o_lr->count()) config.train.optimizer.learning_rate = t_lr;
      if (o_wd->count()) config.train.optimizer.weight_decay = t_wd;
      if (o_runs->count()) config.train.runs = t_runs;
      if (o_seed->count()) config.train.seed = t_seed;
      if (o_val->count()) config.train.val_fraction = t_val;
      if (o_split->count()) config.train.split = split_level_from_string(t_split);
      if (o_threads->count()) config.train.threads = t_threads;
      train_pre.apply(config.preprocess);
      config.train.validate();
      config.model.validate();
      if (config.target_dir.empty()) {
        err << "train: --target is required\n";
        return exit_usage;
      }
      if (config.train.mode == TrainMode::hybridonet_adapt && config.source_dir.empty()) {
        err << "train: --source is required for --mode adapt\n";
        return exit_usage;
      }

      TrainData data;
      data.target = corpus_windows(config.target_dir, config.preprocess, err);
      if (config.train.mode == TrainMode::hybridonet_adapt) {
        data.source = corpus_windows(config.source_dir, config.preprocess, err);
      }
      const EnsembleResult result = train_ensemble(data, config.train, config.model, train_out);
      write_json(fs::path(train_out) / "pipeline.json", to_json(config));
      std::ofstream log(fs::path(train_out) / "train_log.jsonl", std::ios::trunc);
      for (const auto& r : result.reports) {
        write_jsonl(r, log);
        write_jsonl(r, out);
        if (r.failed) err << "warning: run " << r.run << " failed: " << r.error << '\n';
      }
      return exit_ok;
    }

    if (evaluate->parsed()) {
      LoadedModel m = load_model(ev_model);
      PreprocessConfig pc = m.preprocess.value_or(config.preprocess);
      ev_pre.apply(pc);
      const auto cells = load_cells(ev_data);
      const EvalReport report = evaluate_cells(m.ensemble, cells, pc);
      for (const auto& s : report.skipped) {
        err << "warning: skipped " << s.cell_id << ": " << s.reason << '\n';
      }
      if (report.per_cell.empty()) throw DataError(ev_data + ": no cell could be evaluated");
      write_json(ev_out, to_json(report));
      if (!ev_traces.empty()) export_traces(report, ev_traces);
      nlohmann::json summary = to_json(report).at("aggregate");
      out << summary.dump() << '\n';
      return exit_ok;
    }

    if (predict->parsed()) {
      LoadedModel m = load_model(pr_model);
      PreprocessConfig pc = m.preprocess.value_or(config.preprocess);
      pr_pre.apply(pc);
      const CellRecord cell = load_cell(pr_cell);
      const LifeLabel life = compute_cycle_life(cell, pc.eol_threshold);
      const WindowBuild b = build_sample_windows(cell, life, pc);
      if (b.windows.empty()) throw DataError(pr_cell + ": no windows");
      const auto predicted = m.ensemble.predict(b.windows);
      out << "anchor_cycle,predicted_rul\n";
      for (std::size_t i = 0; i < predicted.size(); ++i) {
        out << b.windows[i].anchor_cycle << ',' << predicted[i] << '\n';
      }
      return exit_ok;
    }

    if (embed->parsed()) {
      LoadedModel m = load_model(em_model);
      if (em_member >= m.ensemble.members.size()) {
        err << "export-embeddings: --member out of range\n";
        return exit_usage;
      }
      PreprocessConfig pc = m.preprocess.value_or(config.preprocess);
      em_pre.apply(pc);
      const auto target = corpus_windows(em_target, pc, err);
      std::vector<SampleWindow> source;
      ScalerParams source_scaler;
      std::vector<DomainWindows> domains;
      if (!em_source.empty()) {
        source = corpus_windows(em_source, pc, err);
        source_scaler = fit_minmax_scaler(source);
        domains.push_back({"source", source, &source_scaler});
      }
      domains.push_back({"target", target, &m.ensemble.scaler});
      export_embeddings(m.ensemble.members[em_member], domains, em_out);
      out << nlohmann::json{{"rows", source.size() + target.size()}, {"out", em_out}}.dump()
          << '\n';
      return exit_ok;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return exit_numerical;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << '\n';
    return exit_data;
  }
  return exit_usage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace rulnet
