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

// Rectifier MLP with Monte-Carlo dropout. keep_prob is the probability of
// keeping a hidden unit; kept units are scaled by 1/keep_prob so the
// maskless pass is the expectation.

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rulgp/param_engine.hpp"

namespace rulgp::mcd {

inline constexpr double kNoiseFloor = 1e-8;

struct MLPConfig {
  Eigen::Index input_dim = 1;
  int hidden_layers = 2;
  int hidden_units = 50;
  double keep_prob = 1.0;
  /// Adds a second output, log tau^{-1}(x).
  bool heteroscedastic = false;

  void validate() const;
};

/// One 0/1 matrix (rows x hidden_units) per hidden layer.
using DropoutMask = std::vector<MatrixXd>;

struct ForwardResult {
  VectorXd mean;
  std::optional<VectorXd> noise_variance; // heteroscedastic head only
};

struct MCPredictive {
  double mean = 0.0;
  double variance = 0.0;
  /// (f(x), tau^{-1}(x)) for each pass.
  std::vector<std::pair<double, double>> draws;
};

class MLP {
public:
  MLP() = default;
  MLP(const MLPConfig &config, ParamVector params);

  /// He-normal weights, zero biases. Homoscedastic nets carry a frozen
  /// "noise_variance" slice used by mc_predict.
  static MLP initialize(const MLPConfig &config, RngStream &rng);

  const MLPConfig &config() const { return config_; }
  ParamVector &params() { return params_; }
  const ParamVector &params() const { return params_; }

  double noise_variance() const;
  void set_noise_variance(double value);

  DropoutMask draw_mask(Eigen::Index rows, RngStream &rng) const;

  ForwardResult forward(const MatrixXd &X, const DropoutMask *mask) const;

  /// Batch mean of squared error (or Gaussian NLL with the heteroscedastic
  /// head) plus weight_decay * sum of squared weight entries, with a fresh
  /// mask per row drawn from `rng`.
  double loss(const MatrixXd &X, const VectorXd &y, double weight_decay,
              RngStream &rng, VectorXd *gradient) const;
  double loss_with_mask(const MatrixXd &X, const VectorXd &y,
                        double weight_decay, const DropoutMask &mask,
                        VectorXd *gradient) const;

  std::vector<MCPredictive> mc_predict(const MatrixXd &X, int samples,
                                       RngStream &rng) const;
  /// Single maskless pass.
  VectorXd ffnn_predict(const MatrixXd &X) const;

  static std::string weight_name(int layer);
  static std::string bias_name(int layer);

private:
  MLPConfig config_;
  ParamVector params_;
};

/// Moments of T passes: mean of f, and mean of tau^{-1} plus the spread of f.
MCPredictive mc_moments(std::vector<std::pair<double, double>> draws);

} // namespace rulgp::mcd
