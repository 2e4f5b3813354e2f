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

#include "rulgp/mcd.hpp"

#include <cmath>
#include <numbers>

namespace rulgp::mcd {

void MLPConfig::validate() const {
  if (input_dim < 1) {
    throw DimensionError("MLP: input dimension must be positive");
  }
  if (hidden_layers < 1 || hidden_units < 1) {
    throw Error("MLP: need at least one hidden layer with one unit");
  }
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw Error("MLP: keep_prob must lie in (0, 1], got " +
                std::to_string(keep_prob));
  }
}

std::string MLP::weight_name(int layer) {
  return "layer" + std::to_string(layer) + "/weight";
}

std::string MLP::bias_name(int layer) {
  return "layer" + std::to_string(layer) + "/bias";
}

MLP::MLP(const MLPConfig &config, ParamVector params)
    : config_(config), params_(std::move(params)) {
  config_.validate();
  Eigen::Index in = config_.input_dim;
  for (int l = 0; l <= config_.hidden_layers; ++l) {
    const Eigen::Index out =
        l < config_.hidden_layers ? config_.hidden_units
                                  : (config_.heteroscedastic ? 2 : 1);
    const ParamSlice &w = params_.slice(weight_name(l));
    const ParamSlice &b = params_.slice(bias_name(l));
    if (w.rows != in || w.cols != out || b.rows != 1 || b.cols != out) {
      throw DimensionError("MLP: layer " + std::to_string(l) +
                           " has the wrong shape");
    }
    in = out;
  }
  if (!config_.heteroscedastic) {
    noise_variance();
  }
}

MLP MLP::initialize(const MLPConfig &config, RngStream &rng) {
  config.validate();
  ParamVector params;
  Eigen::Index in = config.input_dim;
  for (int l = 0; l <= config.hidden_layers; ++l) {
    const Eigen::Index out =
        l < config.hidden_layers ? config.hidden_units
                                 : (config.heteroscedastic ? 2 : 1);
    const double std = std::sqrt(2.0 / static_cast<double>(in));
    params.add(weight_name(l), std * rng.normal_matrix(in, out));
    params.add(bias_name(l), MatrixXd::Zero(1, out));
    in = out;
  }
  if (!config.heteroscedastic) {
    params.add("noise_variance", MatrixXd::Constant(1, 1, 1.0),
               Transform::Softplus);
    params.set_trainable("noise_variance", false);
  }
  return MLP(config, std::move(params));
}

double MLP::noise_variance() const {
  if (config_.heteroscedastic) {
    throw Error("MLP: heteroscedastic nets have no fixed noise variance");
  }
  return params_.decode("noise_variance")(0, 0);
}

void MLP::set_noise_variance(double value) {
  if (!(value > 0.0)) {
    throw Error("MLP: noise variance must be positive");
  }
  params_.encode("noise_variance", MatrixXd::Constant(1, 1, value));
}

DropoutMask MLP::draw_mask(Eigen::Index rows, RngStream &rng) const {
  DropoutMask mask;
  for (int l = 0; l < config_.hidden_layers; ++l) {
    MatrixXd m(rows, config_.hidden_units);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        m(i, j) = rng.bernoulli(config_.keep_prob) ? 1.0 : 0.0;
      }
    }
    mask.push_back(std::move(m));
  }
  return mask;
}

namespace {

struct Outputs {
  ad::Var mean;     // n x 1
  ad::Var variance; // n x 1, heteroscedastic only
  ad::Var weight_norm;
};

Outputs run(TapeParams &bound, const MLPConfig &config, const MatrixXd &X,
            const DropoutMask *mask) {
  if (X.cols() != config.input_dim) {
    throw DimensionError("MLP: inputs have " + std::to_string(X.cols()) +
                         " columns, expected " +
                         std::to_string(config.input_dim));
  }
  if (mask != nullptr &&
      static_cast<int>(mask->size()) != config.hidden_layers) {
    throw DimensionError("MLP: mask has the wrong number of layers");
  }
  ad::Tape &tape = bound.tape();
  ad::Var h = tape.constant(X);
  ad::Var norm = tape.constant(0.0);
  for (int l = 0; l <= config.hidden_layers; ++l) {
    ad::Var W = bound.get(MLP::weight_name(l));
    ad::Var b = bound.get(MLP::bias_name(l));
    norm = norm + ad::sum(ad::square(W));
    h = ad::add_row(ad::matmul(h, W), b);
    if (l < config.hidden_layers) {
      h = ad::relu(h);
      if (mask != nullptr) {
        const MatrixXd &m = (*mask)[static_cast<std::size_t>(l)];
        if (m.rows() != X.rows() || m.cols() != h.cols()) {
          throw DimensionError("MLP: mask layer " + std::to_string(l) +
                               " has the wrong shape");
        }
        h = ad::cmul(h, tape.constant(MatrixXd(m / config.keep_prob)));
      }
    }
  }
  Outputs out;
  out.weight_norm = norm;
  if (config.heteroscedastic) {
    out.mean = ad::col(h, 0);
    out.variance = ad::clamp_min(ad::exp(ad::col(h, 1)), kNoiseFloor);
  } else {
    out.mean = h;
  }
  return out;
}

} // namespace

ForwardResult MLP::forward(const MatrixXd &X, const DropoutMask *mask) const {
  ad::Tape tape;
  TapeParams bound(tape, params_, false);
  Outputs o = run(bound, config_, X, mask);
  ForwardResult out;
  out.mean = o.mean.value().col(0);
  if (config_.heteroscedastic) {
    out.noise_variance = VectorXd(o.variance.value().col(0));
  }
  return out;
}

double MLP::loss_with_mask(const MatrixXd &X, const VectorXd &y,
                           double weight_decay, const DropoutMask &mask,
                           VectorXd *gradient) const {
  const Eigen::Index n = X.rows();
  if (n == 0) {
    throw Error("MLP loss: empty batch");
  }
  if (y.size() != n) {
    throw DimensionError("MLP loss: X and y row counts differ");
  }
  if (weight_decay < 0.0) {
    throw Error("MLP loss: weight decay must be nonnegative");
  }
  ad::Tape tape;
  TapeParams bound(tape, params_, gradient != nullptr);
  Outputs o = run(bound, config_, X, &mask);
  ad::Var residual2 = ad::square(tape.constant(MatrixXd(y)) - o.mean);
  ad::Var per_point;
  if (config_.heteroscedastic) {
    const double log2pi = std::log(2.0 * std::numbers::pi);
    per_point = 0.5 * ad::add_scalar(ad::log(o.variance), log2pi) +
                0.5 * ad::cdiv(residual2, o.variance);
  } else {
    per_point = residual2;
  }
  ad::Var loss = (1.0 / static_cast<double>(n)) * ad::sum(per_point) +
                 weight_decay * o.weight_norm;
  if (!std::isfinite(loss.scalar())) {
    throw NumericalError("MLP loss is not finite");
  }
  if (gradient != nullptr) {
    tape.backward(loss);
    *gradient = bound.gradient();
  }
  return loss.scalar();
}

double MLP::loss(const MatrixXd &X, const VectorXd &y, double weight_decay,
                 RngStream &rng, VectorXd *gradient) const {
  return loss_with_mask(X, y, weight_decay, draw_mask(X.rows(), rng),
                        gradient);
}

MCPredictive mc_moments(std::vector<std::pair<double, double>> draws) {
  if (draws.empty()) {
    throw Error("MC predictive: no draws");
  }
  const double T = static_cast<double>(draws.size());
  double mean = 0.0;
  double noise = 0.0;
  for (const auto &[f, tau_inv] : draws) {
    mean += f;
    noise += tau_inv;
  }
  mean /= T;
  noise /= T;
  // (1/T) sum (tau^{-1} + f^2) - mean^2, with the f-spread summed as
  // squared deviations so it stays nonnegative.
  double spread = 0.0;
  for (const auto &d : draws) {
    spread += (d.first - mean) * (d.first - mean);
  }
  MCPredictive out;
  out.mean = mean;
  out.variance = noise + spread / T;
  out.draws = std::move(draws);
  return out;
}

std::vector<MCPredictive> MLP::mc_predict(const MatrixXd &X, int samples,
                                          RngStream &rng) const {
  if (samples < 1) {
    throw Error("mc_predict: need at least one sample");
  }
  const Eigen::Index n = X.rows();
  std::vector<std::vector<std::pair<double, double>>> draws(
      static_cast<std::size_t>(n));
  const double fixed_noise = config_.heteroscedastic ? 0.0 : noise_variance();
  for (int t = 0; t < samples; ++t) {
    const DropoutMask mask = draw_mask(n, rng);
    const ForwardResult r = forward(X, &mask);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double tau_inv =
          r.noise_variance ? (*r.noise_variance)(i) : fixed_noise;
      draws[static_cast<std::size_t>(i)].emplace_back(r.mean(i), tau_inv);
    }
  }
  std::vector<MCPredictive> out;
  out.reserve(draws.size());
  for (auto &d : draws) {
    out.push_back(mc_moments(std::move(d)));
  }
  return out;
}

VectorXd MLP::ffnn_predict(const MatrixXd &X) const {
  return forward(X, nullptr).mean;
}

} // namespace rulgp::mcd
