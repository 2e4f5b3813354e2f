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

// Synthetic run-to-failure fleet.
//
// Each unit carries a health index h that starts at 1 and falls as a random
// walk whose drift grows with accumulated damage; the unit fails when h
// reaches 0 and rul counts the remaining cycles. The first
// kOperatingConditions features are operating conditions drawn per cycle;
// the rest are fixed random smooth functions of damage (1 - h) and the
// operating conditions, plus Gaussian sensor noise.
//
// In Gaussian mode the health features are driven by a noisy reading of the
// rul itself, rul + target_noise * N(0, 1), so y given x is close to
// N(reading, target_noise^2).

#pragma once

#include <cstdint>
#include <string>

#include "rulgp/dataset.hpp"

namespace rulgp {

inline constexpr int kOperatingConditions = 3;

enum class SynthMode { Degradation, Gaussian };

std::string to_string(SynthMode mode);
SynthMode synth_mode_from_string(const std::string &name);

struct SynthConfig {
  int units = 10;
  /// Mean lifetime in cycles.
  int steps = 200;
  Eigen::Index feature_dim = 8;
  double noise = 0.02;
  /// Log-normal spread of the per-unit degradation rate.
  double lifetime_spread = 0.25;
  /// Standard deviation of the health random-walk increments.
  double health_noise = 0.0;
  SynthMode mode = SynthMode::Degradation;
  double target_noise = 5.0;
  /// Shift the last unit's operating conditions by `shift` standard
  /// deviations.
  bool shifted_unit = false;
  double shift = 3.0;
  std::uint64_t seed = 0;

  void validate() const;
};

FleetDataset synth_fleet(const SynthConfig &config);

/// Id of the shifted unit, or -1.
int shifted_unit_id(const SynthConfig &config);

} // namespace rulgp
