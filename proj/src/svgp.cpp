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

#include "rulgp/svgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace rulgp::svgp {

void VariationalGPLayer::validate() const {
  const Eigen::Index M = num_inducing();
  if (M < 1) {
    throw DimensionError("GP layer needs at least one inducing point");
  }
  kernel.validate();
  if (kernel.dim() != input_dim()) {
    throw DimensionError("GP layer: kernel has " +
                         std::to_string(kernel.dim()) +
                         " lengthscales for inputs of dimension " +
                         std::to_string(input_dim()));
  }
  if (variational_mean.size() != M || cov_factor.rows() != M ||
      cov_factor.cols() != M) {
    throw DimensionError("GP layer: variational parameters do not match M=" +
                         std::to_string(M));
  }
  if ((cov_factor.diagonal().array() <= 0.0).any()) {
    throw Error("GP layer: covariance factor diagonal must be positive");
  }
}

std::string to_string(ObjectiveKind kind) {
  return kind == ObjectiveKind::Elbo ? "elbo" : "ppgpr";
}

ObjectiveKind objective_kind_from_string(const std::string &name) {
  if (name == "elbo") return ObjectiveKind::Elbo;
  if (name == "ppgpr") return ObjectiveKind::Ppgpr;
  throw Error("unknown objective kind '" + name + "'");
}

PreparedLayer prepare(const LayerVars &vars) {
  const ad::Var &Z = vars.inducing_points;
  ad::Var Kmm = ad::rbf(Z, Z, vars.lengthscales, vars.variance);
  ad::Var Lk = ad::cholesky(Kmm, kDefaultJitter);
  ad::Var alpha = ad::solve_lower(Lk, vars.variational_mean);
  return {vars, Lk, alpha};
}

LatentVars latent_predict(const PreparedLayer &layer, const ad::Var &X) {
  const LayerVars &v = layer.vars;
  if (X.cols() != v.inducing_points.cols()) {
    throw DimensionError("latent_predict: inputs have " +
                         std::to_string(X.cols()) +
                         " columns, layer expects " +
                         std::to_string(v.inducing_points.cols()));
  }
  ad::Var Knm = ad::rbf(X, v.inducing_points, v.lengthscales, v.variance);
  ad::Var A = ad::solve_lower(layer.kmm_factor, ad::transpose(Knm)); // M x n
  ad::Var mean = ad::matmul(ad::transpose(A), layer.whitened_mean);
  ad::Var W = ad::solve_lower_transposed(layer.kmm_factor, A); // K^{-1} k
  ad::Var B = ad::matmul(ad::transpose(v.cov_factor), W);
  ad::Var explained = ad::transpose(ad::col_sums(ad::square(A)));
  ad::Var spread = ad::transpose(ad::col_sums(ad::square(B)));
  ad::Var raw = (v.variance - explained) + spread;

  const double kvar = v.variance.scalar();
  const double tol = kNegativeVarianceTolerance * std::max(1.0, kvar);
  const double lowest = raw.value().minCoeff();
  if (!(lowest >= -tol)) {
    throw NumericalError("latent variance " + std::to_string(lowest) +
                         " is below the rounding tolerance");
  }
  return {mean, ad::clamp_min(raw, kVarianceFloor)};
}

ad::Var kl_divergence(const PreparedLayer &layer) {
  const LayerVars &v = layer.vars;
  const double M = static_cast<double>(v.inducing_points.rows());
  ad::Var trace = ad::sum(ad::square(ad::solve_lower(layer.kmm_factor,
                                                     v.cov_factor)));
  ad::Var quad = ad::sum(ad::square(layer.whitened_mean));
  ad::Var logdet_k = 2.0 * ad::sum(ad::log(ad::diag_part(layer.kmm_factor)));
  ad::Var logdet_s = 2.0 * ad::sum(ad::log(ad::diag_part(v.cov_factor)));
  return 0.5 * add_scalar(trace + quad + logdet_k - logdet_s, -M);
}

ad::Var gaussian_log_pdf(const ad::Var &y, const ad::Var &mean,
                         const ad::Var &variance) {
  ad::Var r2 = ad::square(y - mean);
  ad::Var log_norm = ad::log(2.0 * std::numbers::pi * variance);
  return -0.5 * (log_norm + ad::cdiv(r2, variance));
}

namespace {

ad::Var objective_on_tape(const PreparedLayer &layer, const ad::Var &obs_var,
                          const ObjectiveSpec &spec, const ad::Var &X,
                          const ad::Var &y, double scale) {
  if (X.rows() == 0) {
    throw Error("objective: empty batch");
  }
  if (X.rows() != y.rows()) {
    throw DimensionError("objective: X and y row counts differ");
  }
  LatentVars lat = latent_predict(layer, X);
  ad::Var kl = kl_divergence(layer);
  if (spec.kind == ObjectiveKind::Elbo) {
    ad::Var fit = gaussian_log_pdf(y, lat.mean, obs_var);
    ad::Var correction = ad::cdiv(lat.variance, 2.0 * obs_var);
    return scale * ad::sum(fit - correction) - kl;
  }
  if (spec.beta_reg < 0.0) {
    throw Error("beta_reg must be nonnegative");
  }
  ad::Var fit = gaussian_log_pdf(y, lat.mean, lat.variance + obs_var);
  return scale * ad::sum(fit) - spec.beta_reg * kl;
}

} // namespace

LatentMoments latent_predict(const VariationalGPLayer &layer,
                             const MatrixXd &X) {
  layer.validate();
  ad::Tape tape;
  PreparedLayer prepared = prepare(constant_layer(tape, layer));
  LatentVars lat = latent_predict(prepared, tape.constant(X));
  return {lat.mean.value().col(0), lat.variance.value().col(0)};
}

std::vector<GaussianDist> predict(const VariationalGPLayer &layer,
                                  const LikelihoodParams &lik,
                                  const MatrixXd &X) {
  if (!(lik.obs_variance > 0.0)) {
    throw Error("observation variance must be positive");
  }
  const LatentMoments lat = latent_predict(layer, X);
  std::vector<GaussianDist> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = {lat.mean(i),
                                        lat.variance(i) + lik.obs_variance};
  }
  return out;
}

double objective(const VariationalGPLayer &layer, const LikelihoodParams &lik,
                 const ObjectiveSpec &spec, const MatrixXd &X,
                 const VectorXd &y, double scale) {
  layer.validate();
  ad::Tape tape;
  PreparedLayer prepared = prepare(constant_layer(tape, layer));
  ad::Var obj =
      objective_on_tape(prepared, tape.constant(lik.obs_variance), spec,
                        tape.constant(X), tape.constant(MatrixXd(y)), scale);
  return obj.scalar();
}

void add_layer_params(ParamVector &params, const std::string &prefix,
                      const VariationalGPLayer &layer) {
  layer.validate();
  params.add(prefix + "inducing_points", layer.inducing_points);
  params.add(prefix + "variational_mean", MatrixXd(layer.variational_mean));
  params.add(prefix + "cov_factor", layer.cov_factor,
             Transform::LowerSoftplusDiag);
  params.add(prefix + "lengthscales",
             MatrixXd(layer.kernel.lengthscales.transpose()),
             Transform::Softplus);
  params.add(prefix + "variance",
             MatrixXd::Constant(1, 1, layer.kernel.variance),
             Transform::Softplus);
}

VariationalGPLayer read_layer(const ParamVector &params,
                              const std::string &prefix) {
  VariationalGPLayer layer;
  layer.inducing_points = params.decode(prefix + "inducing_points");
  layer.variational_mean = params.decode(prefix + "variational_mean").col(0);
  layer.cov_factor = params.decode(prefix + "cov_factor");
  layer.kernel.lengthscales =
      params.decode(prefix + "lengthscales").row(0).transpose();
  layer.kernel.variance = params.decode(prefix + "variance")(0, 0);
  return layer;
}

LayerVars bind_layer(TapeParams &params, const std::string &prefix) {
  return {params.get(prefix + "inducing_points"),
          params.get(prefix + "variational_mean"),
          params.get(prefix + "cov_factor"),
          params.get(prefix + "lengthscales"), params.get(prefix + "variance")};
}

LayerVars constant_layer(ad::Tape &tape, const VariationalGPLayer &layer) {
  return {tape.constant(layer.inducing_points),
          tape.constant(MatrixXd(layer.variational_mean)),
          tape.constant(MatrixXd(
              layer.cov_factor.triangularView<Eigen::Lower>())),
          tape.constant(MatrixXd(layer.kernel.lengthscales.transpose())),
          tape.constant(layer.kernel.variance)};
}

InducingInit inducing_init_from_string(const std::string &name) {
  if (name == "random-subset") return InducingInit::RandomSubset;
  if (name == "kmeans") return InducingInit::KMeans;
  throw Error("unknown inducing initialization '" + name + "'");
}

std::string to_string(InducingInit init) {
  return init == InducingInit::KMeans ? "kmeans" : "random-subset";
}

MatrixXd init_inducing(const MatrixXd &X, Eigen::Index M, InducingInit strategy,
                       RngStream &rng) {
  const Eigen::Index n = X.rows();
  if (M < 1) {
    throw Error("init_inducing: need at least one inducing point");
  }
  if (M > n) {
    throw Error("init_inducing: " + std::to_string(M) +
                " inducing points requested from " + std::to_string(n) +
                " rows");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng.engine());
  order.resize(static_cast<std::size_t>(M));
  MatrixXd centers = take_rows(X, order);
  if (strategy == InducingInit::RandomSubset) {
    return centers;
  }

  std::vector<Eigen::Index> assignment(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 25; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < M; ++k) {
        const double d = (X.row(i) - centers.row(k)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      if (assignment[static_cast<std::size_t>(i)] != best) {
        assignment[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) {
      break;
    }
    MatrixXd sums = MatrixXd::Zero(M, X.cols());
    VectorXd counts = VectorXd::Zero(M);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index k = assignment[static_cast<std::size_t>(i)];
      sums.row(k) += X.row(i);
      counts(k) += 1.0;
    }
    for (Eigen::Index k = 0; k < M; ++k) {
      if (counts(k) > 0.0) {
        centers.row(k) = sums.row(k) / counts(k);
      }
    }
  }
  return centers;
}

VariationalGPLayer initial_layer(const MatrixXd &inducing_points,
                                 double lengthscale, double kernel_variance,
                                 double cov_scale) {
  const Eigen::Index M = inducing_points.rows();
  VariationalGPLayer layer;
  layer.inducing_points = inducing_points;
  layer.variational_mean = VectorXd::Zero(M);
  layer.cov_factor = cov_scale * MatrixXd::Identity(M, M);
  layer.kernel.variance = kernel_variance;
  layer.kernel.lengthscales =
      VectorXd::Constant(inducing_points.cols(), lengthscale);
  return layer;
}

SVGPModel::SVGPModel(const VariationalGPLayer &layer,
                     const LikelihoodParams &lik) {
  add_layer_params(params_, kLayerPrefix, layer);
  params_.add("obs_variance", MatrixXd::Constant(1, 1, lik.obs_variance),
              Transform::Softplus);
}

SVGPModel::SVGPModel(ParamVector params) : params_(std::move(params)) {
  layer().validate();
  likelihood();
}

VariationalGPLayer SVGPModel::layer() const {
  return read_layer(params_, kLayerPrefix);
}

LikelihoodParams SVGPModel::likelihood() const {
  return {params_.decode("obs_variance")(0, 0)};
}

double SVGPModel::loss(const MatrixXd &X, const VectorXd &y, double scale,
                       const ObjectiveSpec &spec, VectorXd *gradient) const {
  ad::Tape tape;
  TapeParams bound(tape, params_, gradient != nullptr);
  PreparedLayer layer = prepare(bind_layer(bound, kLayerPrefix));
  ad::Var obj =
      objective_on_tape(layer, bound.get("obs_variance"), spec,
                        tape.constant(X), tape.constant(MatrixXd(y)), scale);
  ad::Var loss = -obj;
  if (gradient != nullptr) {
    tape.backward(loss);
    *gradient = bound.gradient();
  }
  return loss.scalar();
}

std::vector<GaussianDist> SVGPModel::predict(const MatrixXd &X) const {
  return svgp::predict(layer(), likelihood(), X);
}

} // namespace rulgp::svgp
