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

// Deep sigma point process: the deep GP stack with hidden layers integrated
// by a learnable quadrature instead of Monte-Carlo draws.

#pragma once

#include <vector>

#include "rulgp/dgp.hpp"

namespace rulgp::dspp {

inline constexpr const char *kLogitsName = "dspp/logits";
inline constexpr const char *kSitesName = "dspp/sites";

/// S mixture components. Component s uses sites(s, w) for hidden GP w;
/// the index s is shared by every hidden GP.
struct SigmaPointSet {
  VectorXd logits;
  MatrixXd sites; // S x W_total

  int num_points() const { return static_cast<int>(logits.size()); }
  VectorXd weights() const;
  void validate() const;
};

/// Gauss-Hermite sites copied into every column, logits = log weights.
SigmaPointSet init_sigma_points(int num_points, int total_hidden);

void add_sigma_params(ParamVector &params, const SigmaPointSet &points);
SigmaPointSet read_sigma_points(const ParamVector &params, int total_hidden);

class DSPPModel {
public:
  DSPPModel() = default;
  DSPPModel(const dgp::Architecture &arch, ParamVector params,
            double beta_reg = 1.0);

  static DSPPModel initialize(const dgp::Architecture &arch,
                              const MatrixXd &input_centers,
                              const dgp::StackInit &init, double obs_variance,
                              int num_points, double beta_reg, RngStream &rng);

  ParamVector &params() { return params_; }
  const ParamVector &params() const { return params_; }
  const dgp::Architecture &architecture() const { return arch_; }
  double beta_reg() const { return beta_reg_; }
  int num_points() const;

  SigmaPointSet sigma_points() const;
  svgp::LikelihoodParams likelihood() const;

  /// Output-layer latent moments for each component.
  std::vector<svgp::LatentMoments> forward(const MatrixXd &X) const;

  /// Negated objective: scaled sum of log mixture densities minus
  /// beta_reg times the total KL.
  double loss(const MatrixXd &X, const VectorXd &y, double scale,
              VectorXd *gradient) const;

  std::vector<MixturePredictive> predict(const MatrixXd &X) const;

private:
  int replicas() const;

  dgp::Architecture arch_;
  ParamVector params_;
  double beta_reg_ = 1.0;
};

} // namespace rulgp::dspp
