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

// Doubly-stochastic deep GP: hidden GP layers sampled with the
// reparametrization trick, an optional input skip connection, and a
// Monte-Carlo mixture predictive.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rulgp/predictive.hpp"
#include "rulgp/svgp.hpp"

namespace rulgp::dgp {

inline constexpr int kMaxDepth = 3;

struct Architecture {
  Eigen::Index input_dim = 1;
  int depth = 1; // hidden layers, 0..3
  int width = 4; // GPs per hidden layer
  bool skip_connection = true;

  void validate() const;
  /// Input dimension of hidden layer `layer`, or of the output layer when
  /// layer == depth.
  Eigen::Index layer_input_dim(int layer) const;
  int total_hidden() const { return depth * width; }
};

std::string hidden_prefix(int layer, int unit);
inline constexpr const char *kOutputPrefix = "f/";

/// One layer stack bound to a tape.
struct StackVars {
  std::vector<std::vector<svgp::PreparedLayer>> hidden;
  svgp::PreparedLayer output;
};

StackVars bind_stack(TapeParams &params, const Architecture &arch);
/// Sum of KL(q(u) || p(u)) over every inducing set in the stack.
ad::Var total_kl(const StackVars &stack);

/// Maps a hidden GP's latent moments (replicas * n rows) to the values fed
/// forward. `global_unit` counts hidden GPs across layers.
using HiddenSampler = std::function<ad::Var(
    int layer, int unit, int global_unit, const svgp::LatentVars &latent)>;

/// Pushes X through the stack `replicas` times in one pass. Rows of the
/// result are replica-major: row r * n + i is replica r of input i.
svgp::LatentVars propagate(const StackVars &stack, const Architecture &arch,
                           const ad::Var &X, int replicas,
                           const HiddenSampler &sampler);

/// Adds every layer of an architecture to `params` with a first-pass
/// initialization: hidden and input-side inducing points from
/// `input_centers`, hidden-feature coordinates drawn from N(0, 1).
struct StackInit {
  double lengthscale = 1.0; // <= 0 picks sqrt(input dimension)
  double kernel_variance = 1.0;
  double hidden_cov_scale = 0.1;
  double output_cov_scale = 1.0;
};
void add_stack_params(ParamVector &params, const Architecture &arch,
                      const MatrixXd &input_centers, const StackInit &init,
                      RngStream &rng);

class DeepGPModel {
public:
  DeepGPModel() = default;
  DeepGPModel(const Architecture &arch,
              const std::vector<std::vector<svgp::VariationalGPLayer>> &hidden,
              const svgp::VariationalGPLayer &output,
              const svgp::LikelihoodParams &lik, int num_train_samples = 10,
              int num_test_samples = 64);
  /// Builds a model from a pre-filled ParamVector (checkpoint restore).
  DeepGPModel(const Architecture &arch, ParamVector params,
              int num_train_samples, int num_test_samples);

  static DeepGPModel initialize(const Architecture &arch,
                                const MatrixXd &input_centers,
                                const StackInit &init, double obs_variance,
                                int num_train_samples, int num_test_samples,
                                RngStream &rng);

  ParamVector &params() { return params_; }
  const ParamVector &params() const { return params_; }
  const Architecture &architecture() const { return arch_; }
  int num_train_samples() const { return train_samples_; }
  int num_test_samples() const { return test_samples_; }

  svgp::VariationalGPLayer hidden_layer(int layer, int unit) const;
  svgp::VariationalGPLayer output_layer() const;
  svgp::LikelihoodParams likelihood() const;

  /// Output-layer latent moments for `samples` reparametrized draws.
  std::vector<svgp::LatentMoments> forward_sample(const MatrixXd &X,
                                                  RngStream &rng,
                                                  int samples) const;
  /// Same with explicit draws: eps[l] is (samples * n) x width.
  std::vector<svgp::LatentMoments>
  forward(const MatrixXd &X, const std::vector<MatrixXd> &eps) const;

  /// Negated objective, with num_train_samples draws taken from `rng`.
  double loss(const MatrixXd &X, const VectorXd &y, double scale,
              const svgp::ObjectiveSpec &spec, RngStream &rng,
              VectorXd *gradient) const;
  double loss_with_eps(const MatrixXd &X, const VectorXd &y, double scale,
                       const svgp::ObjectiveSpec &spec,
                       const std::vector<MatrixXd> &eps,
                       VectorXd *gradient) const;

  /// num_test_samples equally weighted components per row.
  std::vector<MixturePredictive> predict(const MatrixXd &X,
                                         RngStream &rng) const;

  std::vector<MatrixXd> draw_eps(Eigen::Index rows, int samples,
                                 RngStream &rng) const;

private:
  Architecture arch_;
  ParamVector params_;
  int train_samples_ = 10;
  int test_samples_ = 64;
};

} // namespace rulgp::dgp
