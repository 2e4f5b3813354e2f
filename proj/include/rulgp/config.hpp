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

// Experiment configuration. Files are JSON; every key is optional and
// unknown keys are rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rulgp/svgp.hpp"

namespace rulgp {

enum class ModelKind { Svgp, Dgp, Dspp, Mcd, Ffnn };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string &name);

struct TrainingConfig {
  Eigen::Index batch_size = 2000;
  double learning_rate = 1e-3;
  int epochs = 50;
  /// Tail fraction of each training unit used for validation.
  double validation_fraction = 0.1;
  /// Train on z-scored targets; predictions are mapped back.
  bool standardize_targets = true;
  /// Caps RUL targets at this value when positive.
  double rul_cap = 0.0;
};

struct GPConfig {
  Eigen::Index num_inducing = 100;
  svgp::InducingInit inducing_init = svgp::InducingInit::KMeans;
  bool train_inducing = true;
  double lengthscale = -1.0; // <= 0 picks sqrt(input dimension)
  double kernel_variance = 1.0;
  double obs_variance = 0.1;
  double beta_reg = 1.0;
};

struct SvgpConfig : GPConfig {
  SvgpConfig() { num_inducing = 800; }
  svgp::ObjectiveKind objective = svgp::ObjectiveKind::Elbo;
};

struct DgpConfig : GPConfig {
  svgp::ObjectiveKind objective = svgp::ObjectiveKind::Elbo;
  int depth = 1;
  int width = 4;
  bool skip_connection = true;
  int train_samples = 10;
  int test_samples = 64;
  double hidden_cov_scale = 0.1;
};

struct DsppConfig : GPConfig {
  int depth = 1;
  int width = 2;
  bool skip_connection = true;
  int num_points = 15;
  double hidden_cov_scale = 0.1;
};

struct NetConfig {
  int hidden_layers = 5;
  int hidden_units = 200;
  double keep_prob = 0.4642;
  double weight_decay = 1e-6;
  bool heteroscedastic = true;
  int test_samples = 128;
};

struct SplitConfig {
  /// Both empty: the first two thirds of the units (rounded up) train.
  std::vector<int> train_units;
  std::vector<int> test_units;
};

struct ExperimentConfig {
  ModelKind model = ModelKind::Dspp;
  std::uint64_t seed = 0;
  double alpha = 0.2;
  TrainingConfig training;
  SplitConfig split;
  SvgpConfig svgp;
  DgpConfig dgp;
  DsppConfig dspp;
  NetConfig mcd;
  NetConfig ffnn{5, 65, 0.85, 1e-6, false, 1};

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig &config);
ExperimentConfig config_from_json(const nlohmann::json &j);
ExperimentConfig load_config(const std::filesystem::path &path);
void save_config(const ExperimentConfig &config,
                 const std::filesystem::path &path);

/// Sets a dotted key such as "dspp.width" and re-validates.
ExperimentConfig with_override(const ExperimentConfig &config,
                               const std::string &key,
                               const nlohmann::json &value);

/// Ordered map from dotted key to candidate values.
using Grid = std::vector<std::pair<std::string, std::vector<nlohmann::json>>>;

/// The published search space for each model family.
Grid default_grid(ModelKind kind);
/// 12 log-spaced keep probabilities in [0.01, 1): 10^(-2 + k/6).
std::vector<double> keep_prob_grid();

} // namespace rulgp
