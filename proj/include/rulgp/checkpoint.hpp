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

// Self-describing JSON checkpoint: format version, the full experiment
// config, preprocessing state and every parameter slice as a named array.

#pragma once

#include <filesystem>
#include <string>

#include "rulgp/config.hpp"
#include "rulgp/dataset.hpp"
#include "rulgp/param_engine.hpp"

namespace rulgp {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  ExperimentConfig config;
  Eigen::Index input_dim = 0;
  NormalizationStats stats;
  /// Natural-unit target = offset + scale * model output.
  double target_offset = 0.0;
  double target_scale = 1.0;
  std::vector<int> train_units;
  std::vector<int> test_units;
  ParamVector params;
};

std::string checkpoint_to_string(const Checkpoint &ckpt);
Checkpoint checkpoint_from_string(const std::string &text);
void save_checkpoint(const Checkpoint &ckpt, const std::filesystem::path &path);
Checkpoint load_checkpoint(const std::filesystem::path &path);

} // namespace rulgp
