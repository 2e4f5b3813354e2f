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

#include "rulgp/synth.hpp"

#include <cmath>
#include <vector>

#include "rulgp/param_engine.hpp"

namespace rulgp {

namespace {

// Damage rate is r * (1 + kAcceleration * damage); with h falling from 1 to
// 0 the expected lifetime is log(1 + kAcceleration) / (kAcceleration * r).
constexpr double kAcceleration = 3.0;
constexpr int kMaxLifetimeFactor = 20;

// Coefficients of one health feature.
struct Sensor {
  double linear;
  double curvature;
  double saturation;
  Eigen::Vector<double, kOperatingConditions> op_weights;
  double op_scale;
};

double sensor_value(const Sensor &s, double damage,
                    const Eigen::Vector<double, kOperatingConditions> &op) {
  return s.linear * damage + s.curvature * damage * damage +
         s.saturation * std::tanh(2.0 * damage - 1.0) +
         s.op_scale * std::tanh(s.op_weights.dot(op)) * (1.0 + damage);
}

} // namespace

std::string to_string(SynthMode mode) {
  return mode == SynthMode::Gaussian ? "gaussian" : "degradation";
}

SynthMode synth_mode_from_string(const std::string &name) {
  if (name == "degradation") return SynthMode::Degradation;
  if (name == "gaussian") return SynthMode::Gaussian;
  throw Error("unknown synth mode '" + name + "'");
}

void SynthConfig::validate() const {
  if (units < 2) {
    throw Error("synth: need at least two units");
  }
  if (steps < 2) {
    throw Error("synth: steps must be at least 2");
  }
  if (feature_dim <= kOperatingConditions) {
    throw Error("synth: feature_dim must exceed " +
                std::to_string(kOperatingConditions));
  }
  if (noise < 0.0 || lifetime_spread < 0.0 || health_noise < 0.0 ||
      target_noise < 0.0) {
    throw Error("synth: noise levels must be nonnegative");
  }
}

int shifted_unit_id(const SynthConfig &config) {
  return config.shifted_unit ? config.units : -1;
}

FleetDataset synth_fleet(const SynthConfig &config) {
  config.validate();
  RngStream design(mix_seed(config.seed, 0));
  const Eigen::Index m = config.feature_dim;
  std::vector<Sensor> sensors;
  for (Eigen::Index k = kOperatingConditions; k < m; ++k) {
    Sensor s;
    s.linear = 1.0 + design.uniform();
    s.curvature = design.normal();
    s.saturation = 0.5 * design.normal();
    for (int c = 0; c < kOperatingConditions; ++c) {
      s.op_weights(c) = design.normal();
    }
    s.op_scale = 0.5 * design.uniform();
    sensors.push_back(s);
  }

  const double base_rate = std::log(1.0 + kAcceleration) /
                           (kAcceleration * static_cast<double>(config.steps));
  FleetDataset data;
  data.feature_dim = m;
  for (int i = 0; i < config.units; ++i) {
    RngStream rng(mix_seed(config.seed, static_cast<std::uint64_t>(i) + 1));
    const int id = i + 1;
    const double rate =
        base_rate * std::exp(config.lifetime_spread * rng.normal());

    // Health trajectory until failure.
    std::vector<double> health{1.0};
    const int cap = kMaxLifetimeFactor * config.steps;
    while (health.back() > 0.0 && static_cast<int>(health.size()) < cap) {
      const double damage = 1.0 - health.back();
      const double step = rate * (1.0 + kAcceleration * damage) +
                          config.health_noise * rng.normal();
      health.push_back(std::min(1.0, health.back() - step));
    }
    // The failing cycle is the first with h <= 0; keep cycles before it.
    const auto n = static_cast<Eigen::Index>(
        std::max<std::size_t>(health.size() - 1, 2));
    health.resize(static_cast<std::size_t>(n));

    const double shift = id == shifted_unit_id(config) ? config.shift : 0.0;
    Unit u;
    u.id = id;
    u.t.resize(n);
    u.rul.resize(n);
    u.features.resize(n, m);
    for (Eigen::Index t = 0; t < n; ++t) {
      u.t(t) = static_cast<double>(t);
      u.rul(t) = static_cast<double>(n - 1 - t);
      Eigen::Vector<double, kOperatingConditions> op;
      for (int c = 0; c < kOperatingConditions; ++c) {
        op(c) = shift + rng.normal();
        u.features(t, c) = op(c);
      }
      double damage = 1.0 - health[static_cast<std::size_t>(t)];
      if (config.mode == SynthMode::Gaussian) {
        const double reading = u.rul(t) + config.target_noise * rng.normal();
        damage = 1.0 - reading / static_cast<double>(config.steps);
      }
      for (std::size_t k = 0; k < sensors.size(); ++k) {
        u.features(t, kOperatingConditions + static_cast<Eigen::Index>(k)) =
            sensor_value(sensors[k], damage, op) + config.noise * rng.normal();
      }
    }
    data.units.push_back(std::move(u));
  }
  data.validate();
  return data;
}

} // namespace rulgp
