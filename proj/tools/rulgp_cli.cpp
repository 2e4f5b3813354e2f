/* Copyright (c) 2026 The rulgp Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

// rulgp command line: synth, train, predict, evaluate, gridsearch.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rulgp/experiment.hpp"
#include "rulgp/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rulgp;

namespace {

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out << text;
}

json read_json(const fs::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    throw Error(path.string() + ": " + e.what());
  }
}

SynthConfig synth_config_from_json(const json &j) {
  SynthConfig c;
  for (const auto &[key, value] : j.items()) {
    if (key == "units") c.units = value.get<int>();
    else if (key == "steps") c.steps = value.get<int>();
    else if (key == "feature_dim") c.feature_dim = value.get<Eigen::Index>();
    else if (key == "noise") c.noise = value.get<double>();
    else if (key == "lifetime_spread") c.lifetime_spread = value.get<double>();
    else if (key == "health_noise") c.health_noise = value.get<double>();
    else if (key == "mode") c.mode = synth_mode_from_string(value.get<std::string>());
    else if (key == "target_noise") c.target_noise = value.get<double>();
    else if (key == "shifted_unit") c.shifted_unit = value.get<bool>();
    else if (key == "shift") c.shift = value.get<double>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else throw Error("synth config: unknown key '" + key + "'");
  }
  return c;
}

ExperimentConfig experiment_config(const std::string &path,
                                   std::optional<std::uint64_t> seed,
                                   const std::string &model) {
  ExperimentConfig config =
      path.empty() ? ExperimentConfig{} : load_config(path);
  if (seed) {
    config.seed = *seed;
  }
  if (!model.empty()) {
    config.model = model_kind_from_string(model);
  }
  config.validate();
  return config;
}

void write_report(const metrics::MetricsReport &report, const fs::path &dir,
                  const std::string &stem) {
  write_text(dir / (stem + ".txt"), metrics::to_text(report));
  write_text(dir / (stem + ".json"), metrics::to_json(report) + "\n");
}

std::vector<int> parse_ids(const std::string &text) {
  std::vector<int> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) {
      ids.push_back(std::stoi(item));
    }
  }
  return ids;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Probabilistic remaining-useful-life regression"};
  app.require_subcommand(1);

  std::string config_path;
  std::string data_dir;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string model;

  // synth
  auto *synth = app.add_subcommand("synth", "generate a synthetic fleet");
  SynthConfig synth_config;
  std::string mode = "degradation";
  synth->add_option("--config", config_path, "synth settings (JSON)");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--seed", seed, "random seed");
  synth->add_option("--units", synth_config.units, "number of units");
  synth->add_option("--steps", synth_config.steps, "mean lifetime in cycles");
  synth->add_option("--features", synth_config.feature_dim,
                    "feature count (8, or 41 for full width)");
  synth->add_option("--noise", synth_config.noise, "sensor noise std");
  synth->add_option("--mode", mode, "degradation or gaussian");
  synth->add_option("--target-noise", synth_config.target_noise,
                    "rul reading noise std in gaussian mode");
  synth->add_flag("--shifted", synth_config.shifted_unit,
                  "shift the last unit's operating conditions");

  // train
  auto *train = app.add_subcommand("train", "train one model");
  train->add_option("--config", config_path, "experiment config (JSON)");
  train->add_option("--data", data_dir, "fleet directory")->required();
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--seed", seed, "random seed");
  train->add_option("--model", model, "svgp, dgp, dspp, mcd or ffnn");

  // predict / evaluate
  std::string checkpoint_path;
  std::string units;
  auto *predict = app.add_subcommand("predict", "predict with a checkpoint");
  predict->add_option("--data", data_dir, "fleet directory")->required();
  predict->add_option("--out", out_dir, "output directory")->required();
  predict->add_option("--checkpoint", checkpoint_path,
                      "checkpoint file (default: <out>/checkpoint.json)");
  predict->add_option("--units", units,
                      "comma-separated unit ids (default: test units)");
  auto *evaluate = app.add_subcommand("evaluate", "score a checkpoint");
  evaluate->add_option("--data", data_dir, "fleet directory")->required();
  evaluate->add_option("--out", out_dir, "output directory")->required();
  evaluate->add_option("--checkpoint", checkpoint_path,
                       "checkpoint file (default: <out>/checkpoint.json)");
  evaluate->add_option("--units", units,
                       "comma-separated unit ids (default: test units)");

  // gridsearch
  std::string models;
  std::string grid_path;
  bool keep_checkpoints = false;
  auto *grid = app.add_subcommand("gridsearch", "hyperparameter grid search");
  grid->add_option("--config", config_path, "base experiment config (JSON)");
  grid->add_option("--data", data_dir, "fleet directory")->required();
  grid->add_option("--out", out_dir, "output directory")->required();
  grid->add_option("--seed", seed, "random seed");
  grid->add_option("--models", models,
                   "comma-separated model kinds, or 'all' (default: the "
                   "config's model)");
  grid->add_option("--grid", grid_path,
                   "JSON object of dotted key -> value list (default: the "
                   "published grid of each model)");
  grid->add_flag("--save-checkpoints", keep_checkpoints,
                 "write every run's checkpoint");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      if (!config_path.empty()) {
        const SynthConfig from_file =
            synth_config_from_json(read_json(config_path));
        synth_config = from_file;
      } else {
        synth_config.mode = synth_mode_from_string(mode);
      }
      if (seed) {
        synth_config.seed = *seed;
      }
      const FleetDataset data = synth_fleet(synth_config);
      save_fleet(data, out_dir);
      std::cout << "wrote " << data.units.size() << " units to " << out_dir
                << '\n';
      if (synth_config.shifted_unit) {
        std::cout << "shifted unit: " << shifted_unit_id(synth_config) << '\n';
      }
      return 0;
    }

    if (*train) {
      const ExperimentConfig config =
          experiment_config(config_path, seed, model);
      const FleetDataset data = load_fleet(data_dir);
      fs::create_directories(out_dir);
      RunResult run = run_experiment(config, data, &std::cout);
      save_checkpoint(run.checkpoint, fs::path(out_dir) / "checkpoint.json");
      write_train_log(run.log, fs::path(out_dir) / "train_log.csv");
      if (run.validation) {
        write_report(*run.validation, out_dir, "validation_report");
      }
      if (run.test) {
        write_report(*run.test, out_dir, "report");
        write_predictions(run.test_records,
                          fs::path(out_dir) / "predictions.csv");
        std::cout << metrics::to_text(*run.test);
      }
      return 0;
    }

    if (*predict || *evaluate) {
      const fs::path ckpt_file = checkpoint_path.empty()
                                     ? fs::path(out_dir) / "checkpoint.json"
                                     : fs::path(checkpoint_path);
      const Checkpoint ckpt = load_checkpoint(ckpt_file);
      const FleetDataset data = load_fleet(data_dir);
      const std::vector<int> ids =
          units.empty() ? ckpt.test_units : parse_ids(units);
      if (ids.empty()) {
        throw Error("no units to predict");
      }
      const auto records = predict_units(ckpt, data, ids);
      fs::create_directories(out_dir);
      if (*predict) {
        write_predictions(records, fs::path(out_dir) / "predictions.csv");
        std::cout << "wrote " << records.size() << " predictions\n";
      } else {
        const auto report = metrics::evaluate(records, ckpt.config.alpha);
        write_report(report, out_dir, "report");
        std::cout << metrics::to_text(report);
      }
      return 0;
    }

    if (*grid) {
      const ExperimentConfig base = experiment_config(config_path, seed, "");
      const FleetDataset data = load_fleet(data_dir);
      fs::create_directories(out_dir);
      std::vector<ModelKind> kinds;
      if (models.empty()) {
        kinds.push_back(base.model);
      } else if (models == "all") {
        kinds = {ModelKind::Svgp, ModelKind::Dgp, ModelKind::Dspp,
                 ModelKind::Mcd, ModelKind::Ffnn};
      } else {
        std::stringstream ss(models);
        std::string item;
        while (std::getline(ss, item, ',')) {
          kinds.push_back(model_kind_from_string(item));
        }
      }
      std::optional<json> custom;
      if (!grid_path.empty()) {
        custom = read_json(grid_path);
      }
      std::vector<GridResult> results;
      json summary = json::array();
      for (ModelKind kind : kinds) {
        ExperimentConfig config = base;
        config.model = kind;
        Grid g;
        if (custom) {
          for (const auto &[key, values] : custom->items()) {
            g.emplace_back(key, values.get<std::vector<json>>());
          }
        } else {
          g = default_grid(kind);
        }
        std::cout << "== " << to_string(kind) << '\n';
        std::optional<fs::path> ckpt_dir;
        if (keep_checkpoints) {
          ckpt_dir = fs::path(out_dir) / ("checkpoints_" + to_string(kind));
        }
        GridResult r = grid_search(config, g, data, &std::cout, ckpt_dir);
        write_text(fs::path(out_dir) / ("grid_" + to_string(kind) + ".csv"),
                   grid_table_csv(r));
        summary.push_back(grid_json(r));
        results.push_back(std::move(r));
      }
      const std::string table = table1_text(results);
      write_text(fs::path(out_dir) / "table1.txt", table);
      write_text(fs::path(out_dir) / "gridsearch.json", summary.dump(2) + "\n");
      std::cout << table;
      return 0;
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
