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

// Sparse variational GP regression with a direct (unwhitened) q(u) = N(m, S).

#pragma once

#include <string>
#include <vector>

#include "rulgp/autodiff.hpp"
#include "rulgp/math_core.hpp"
#include "rulgp/param_engine.hpp"

namespace rulgp::svgp {

struct VariationalGPLayer {
  MatrixXd inducing_points; // M x d
  VectorXd variational_mean;
  MatrixXd cov_factor; // lower-triangular Cholesky factor of S
  Kernel kernel;

  Eigen::Index input_dim() const { return inducing_points.cols(); }
  Eigen::Index num_inducing() const { return inducing_points.rows(); }
  void validate() const;
};

struct LikelihoodParams {
  double obs_variance = 1.0;
};

enum class ObjectiveKind { Elbo, Ppgpr };

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::Ppgpr;
  /// KL weight for the ppgpr objective; the ELBO always uses 1.
  double beta_reg = 1.0;
};

std::string to_string(ObjectiveKind kind);
ObjectiveKind objective_kind_from_string(const std::string &name);

struct LatentMoments {
  VectorXd mean;
  VectorXd variance;
};

/// Rounding below zero in the latent variance is tolerated up to this
/// amount (scaled by the kernel variance) and then clamped to kVarianceFloor.
inline constexpr double kNegativeVarianceTolerance = 1e-9;
inline constexpr double kVarianceFloor = 1e-12;

LatentMoments latent_predict(const VariationalGPLayer &layer,
                             const MatrixXd &X);
std::vector<GaussianDist> predict(const VariationalGPLayer &layer,
                                  const LikelihoodParams &lik,
                                  const MatrixXd &X);
/// Objective value (to be maximized) on a batch whose data term is
/// multiplied by `scale`.
double objective(const VariationalGPLayer &layer, const LikelihoodParams &lik,
                 const ObjectiveSpec &spec, const MatrixXd &X,
                 const VectorXd &y, double scale);

// Tape-level building blocks shared with the deep models.

/// One GP layer's parameters as tape nodes (constrained values).
struct LayerVars {
  ad::Var inducing_points;
  ad::Var variational_mean; // M x 1
  ad::Var cov_factor;
  ad::Var lengthscales; // 1 x d
  ad::Var variance;     // 1 x 1
};

/// LayerVars plus the factorization of K_MM, computed once per tape.
struct PreparedLayer {
  LayerVars vars;
  ad::Var kmm_factor;
  ad::Var whitened_mean; // L_K^{-1} m
};

struct LatentVars {
  ad::Var mean;     // n x 1
  ad::Var variance; // n x 1
};

PreparedLayer prepare(const LayerVars &vars);
LatentVars latent_predict(const PreparedLayer &layer, const ad::Var &X);
/// KL(q(u) || p(u)) as a 1x1 node.
ad::Var kl_divergence(const PreparedLayer &layer);
/// Elementwise log N(y | mean, variance) for n x 1 nodes.
ad::Var gaussian_log_pdf(const ad::Var &y, const ad::Var &mean,
                         const ad::Var &variance);

/// Parameter names used for a layer stored under `prefix`.
void add_layer_params(ParamVector &params, const std::string &prefix,
                      const VariationalGPLayer &layer);
VariationalGPLayer read_layer(const ParamVector &params,
                              const std::string &prefix);
LayerVars bind_layer(TapeParams &params, const std::string &prefix);
LayerVars constant_layer(ad::Tape &tape, const VariationalGPLayer &layer);

enum class InducingInit { RandomSubset, KMeans };

InducingInit inducing_init_from_string(const std::string &name);
std::string to_string(InducingInit init);

/// random-subset: M distinct rows of X. kmeans: 25 Lloyd iterations seeded
/// by a random subset.
MatrixXd init_inducing(const MatrixXd &X, Eigen::Index M, InducingInit strategy,
                       RngStream &rng);

/// Initial layer: zero mean, S = cov_scale^2 * I, isotropic lengthscale.
VariationalGPLayer initial_layer(const MatrixXd &inducing_points,
                                 double lengthscale, double kernel_variance,
                                 double cov_scale);

/// Single-layer model whose parameters live in one ParamVector:
/// "f/..." for the layer and "obs_variance" for the likelihood.
class SVGPModel {
public:
  SVGPModel() = default;
  SVGPModel(const VariationalGPLayer &layer, const LikelihoodParams &lik);
  /// Adopts a filled ParamVector (checkpoint restore).
  explicit SVGPModel(ParamVector params);

  ParamVector &params() { return params_; }
  const ParamVector &params() const { return params_; }

  VariationalGPLayer layer() const;
  LikelihoodParams likelihood() const;

  /// Negated objective; fills `gradient` (raw space) when non-null.
  double loss(const MatrixXd &X, const VectorXd &y, double scale,
              const ObjectiveSpec &spec, VectorXd *gradient) const;
  std::vector<GaussianDist> predict(const MatrixXd &X) const;

  static constexpr const char *kLayerPrefix = "f/";

private:
  ParamVector params_;
};

} // namespace rulgp::svgp
