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

#include "rulgp/dgp.hpp"

#include <algorithm>
#include <cmath>

namespace rulgp::dgp {

namespace {

// Prediction works through inputs in chunks so replicated rows stay small.
constexpr Eigen::Index kPredictChunk = 256;

ad::Var tile(const ad::Var &v, int replicas) {
  if (replicas == 1) {
    return v;
  }
  return ad::vcat(std::vector<ad::Var>(static_cast<std::size_t>(replicas), v));
}

} // namespace

void Architecture::validate() const {
  if (input_dim < 1) {
    throw DimensionError("architecture: input dimension must be positive");
  }
  if (depth < 0 || depth > kMaxDepth) {
    throw Error("architecture: depth must be in [0, 3], got " +
                std::to_string(depth));
  }
  if (depth > 0 && width < 1) {
    throw Error("architecture: hidden width must be positive");
  }
}

Eigen::Index Architecture::layer_input_dim(int layer) const {
  if (layer == 0) {
    return input_dim;
  }
  return width + (skip_connection ? input_dim : 0);
}

std::string hidden_prefix(int layer, int unit) {
  return "h" + std::to_string(layer) + "/" + std::to_string(unit) + "/";
}

StackVars bind_stack(TapeParams &params, const Architecture &arch) {
  StackVars stack;
  for (int l = 0; l < arch.depth; ++l) {
    std::vector<svgp::PreparedLayer> layer;
    for (int w = 0; w < arch.width; ++w) {
      layer.push_back(
          svgp::prepare(svgp::bind_layer(params, hidden_prefix(l, w))));
    }
    stack.hidden.push_back(std::move(layer));
  }
  stack.output = svgp::prepare(svgp::bind_layer(params, kOutputPrefix));
  return stack;
}

ad::Var total_kl(const StackVars &stack) {
  ad::Var total = svgp::kl_divergence(stack.output);
  for (const auto &layer : stack.hidden) {
    for (const auto &gp : layer) {
      total = total + svgp::kl_divergence(gp);
    }
  }
  return total;
}

svgp::LatentVars propagate(const StackVars &stack, const Architecture &arch,
                           const ad::Var &X, int replicas,
                           const HiddenSampler &sampler) {
  if (replicas < 1) {
    throw Error("propagate: need at least one replica");
  }
  if (X.cols() != arch.input_dim) {
    throw DimensionError("propagate: inputs have " + std::to_string(X.cols()) +
                         " columns, architecture expects " +
                         std::to_string(arch.input_dim));
  }
  const ad::Var X_tiled = tile(X, replicas);
  ad::Var input = X_tiled;
  int global = 0;
  for (int l = 0; l < arch.depth; ++l) {
    std::vector<ad::Var> outputs;
    for (int w = 0; w < arch.width; ++w) {
      const svgp::PreparedLayer &gp =
          stack.hidden[static_cast<std::size_t>(l)][static_cast<std::size_t>(w)];
      svgp::LatentVars latent;
      if (l == 0) {
        // The first layer sees identical inputs in every replica.
        svgp::LatentVars once = svgp::latent_predict(gp, X);
        latent = {tile(once.mean, replicas), tile(once.variance, replicas)};
      } else {
        latent = svgp::latent_predict(gp, input);
      }
      outputs.push_back(sampler(l, w, global, latent));
      ++global;
    }
    ad::Var g = ad::hcat(outputs);
    input = arch.skip_connection ? ad::hcat({g, X_tiled}) : g;
  }
  return svgp::latent_predict(stack.output, input);
}

void add_stack_params(ParamVector &params, const Architecture &arch,
                      const MatrixXd &input_centers, const StackInit &init,
                      RngStream &rng) {
  arch.validate();
  if (input_centers.cols() != arch.input_dim) {
    throw DimensionError("stack init: centers have wrong dimension");
  }
  const Eigen::Index M = input_centers.rows();
  auto lengthscale_for = [&](Eigen::Index dim) {
    return init.lengthscale > 0.0 ? init.lengthscale
                                  : std::sqrt(static_cast<double>(dim));
  };
  auto inducing_for = [&](int layer) {
    if (layer == 0) {
      return MatrixXd(input_centers);
    }
    MatrixXd Z(M, arch.layer_input_dim(layer));
    Z.leftCols(arch.width) = rng.normal_matrix(M, arch.width);
    if (arch.skip_connection) {
      Z.rightCols(arch.input_dim) = input_centers;
    }
    return Z;
  };

  for (int l = 0; l < arch.depth; ++l) {
    for (int w = 0; w < arch.width; ++w) {
      const MatrixXd Z = inducing_for(l);
      svgp::add_layer_params(
          params, hidden_prefix(l, w),
          svgp::initial_layer(Z, lengthscale_for(Z.cols()),
                              init.kernel_variance, init.hidden_cov_scale));
    }
  }
  const MatrixXd Zf = inducing_for(arch.depth);
  svgp::add_layer_params(
      params, kOutputPrefix,
      svgp::initial_layer(Zf, lengthscale_for(Zf.cols()), init.kernel_variance,
                          init.output_cov_scale));
}

DeepGPModel::DeepGPModel(
    const Architecture &arch,
    const std::vector<std::vector<svgp::VariationalGPLayer>> &hidden,
    const svgp::VariationalGPLayer &output, const svgp::LikelihoodParams &lik,
    int num_train_samples, int num_test_samples)
    : arch_(arch), train_samples_(num_train_samples),
      test_samples_(num_test_samples) {
  arch_.validate();
  if (static_cast<int>(hidden.size()) != arch.depth) {
    throw DimensionError("deep GP: expected " + std::to_string(arch.depth) +
                         " hidden layers, got " +
                         std::to_string(hidden.size()));
  }
  for (int l = 0; l < arch.depth; ++l) {
    const auto &layer = hidden[static_cast<std::size_t>(l)];
    if (static_cast<int>(layer.size()) != arch.width) {
      throw DimensionError("deep GP: hidden layer " + std::to_string(l) +
                           " has the wrong width");
    }
    for (int w = 0; w < arch.width; ++w) {
      const auto &gp = layer[static_cast<std::size_t>(w)];
      if (gp.input_dim() != arch.layer_input_dim(l)) {
        throw DimensionError("deep GP: hidden GP input dimension mismatch");
      }
      svgp::add_layer_params(params_, hidden_prefix(l, w), gp);
    }
  }
  if (output.input_dim() != arch.layer_input_dim(arch.depth)) {
    throw DimensionError("deep GP: output layer expects inputs of dimension " +
                         std::to_string(arch.layer_input_dim(arch.depth)));
  }
  svgp::add_layer_params(params_, kOutputPrefix, output);
  params_.add("obs_variance", MatrixXd::Constant(1, 1, lik.obs_variance),
              Transform::Softplus);
  if (train_samples_ < 1 || test_samples_ < 1) {
    throw Error("deep GP: sample counts must be positive");
  }
}

DeepGPModel::DeepGPModel(const Architecture &arch, ParamVector params,
                         int num_train_samples, int num_test_samples)
    : arch_(arch), params_(std::move(params)),
      train_samples_(num_train_samples), test_samples_(num_test_samples) {
  arch_.validate();
  if (train_samples_ < 1 || test_samples_ < 1) {
    throw Error("deep GP: sample counts must be positive");
  }
  // Reading every layer validates names and shapes.
  for (int l = 0; l < arch_.depth; ++l) {
    for (int w = 0; w < arch_.width; ++w) {
      hidden_layer(l, w).validate();
    }
  }
  output_layer().validate();
  likelihood();
}

DeepGPModel DeepGPModel::initialize(const Architecture &arch,
                                    const MatrixXd &input_centers,
                                    const StackInit &init, double obs_variance,
                                    int num_train_samples,
                                    int num_test_samples, RngStream &rng) {
  ParamVector params;
  add_stack_params(params, arch, input_centers, init, rng);
  params.add("obs_variance", MatrixXd::Constant(1, 1, obs_variance),
             Transform::Softplus);
  return DeepGPModel(arch, std::move(params), num_train_samples,
                     num_test_samples);
}

svgp::VariationalGPLayer DeepGPModel::hidden_layer(int layer, int unit) const {
  return svgp::read_layer(params_, hidden_prefix(layer, unit));
}

svgp::VariationalGPLayer DeepGPModel::output_layer() const {
  return svgp::read_layer(params_, kOutputPrefix);
}

svgp::LikelihoodParams DeepGPModel::likelihood() const {
  return {params_.decode("obs_variance")(0, 0)};
}

std::vector<MatrixXd> DeepGPModel::draw_eps(Eigen::Index rows, int samples,
                                            RngStream &rng) const {
  std::vector<MatrixXd> eps;
  for (int l = 0; l < arch_.depth; ++l) {
    eps.push_back(rng.normal_matrix(rows * samples, arch_.width));
  }
  return eps;
}

namespace {

HiddenSampler reparametrized(ad::Tape &tape, const std::vector<MatrixXd> &eps) {
  return [&tape, &eps](int layer, int unit, int, const svgp::LatentVars &lat) {
    const MatrixXd &e = eps[static_cast<std::size_t>(layer)];
    if (e.rows() != lat.mean.rows()) {
      throw DimensionError("deep GP: eps has the wrong number of rows");
    }
    ad::Var noise = tape.constant(MatrixXd(e.col(unit)));
    return lat.mean + ad::cmul(noise, ad::sqrt(lat.variance));
  };
}

int replicas_of(const std::vector<MatrixXd> &eps, Eigen::Index n) {
  if (eps.empty() || n == 0) {
    return 1;
  }
  if (eps.front().rows() % n != 0) {
    throw DimensionError("deep GP: eps rows are not a multiple of n");
  }
  return static_cast<int>(eps.front().rows() / n);
}

} // namespace

std::vector<svgp::LatentMoments>
DeepGPModel::forward(const MatrixXd &X, const std::vector<MatrixXd> &eps) const {
  if (static_cast<int>(eps.size()) != arch_.depth) {
    throw DimensionError("deep GP: one eps matrix per hidden layer expected");
  }
  const Eigen::Index n = X.rows();
  const int R = replicas_of(eps, n);
  ad::Tape tape;
  TapeParams bound(tape, params_, false);
  StackVars stack = bind_stack(bound, arch_);
  svgp::LatentVars lat = propagate(stack, arch_, tape.constant(X), R,
                                   reparametrized(tape, eps));
  std::vector<svgp::LatentMoments> out;
  for (int r = 0; r < R; ++r) {
    out.push_back({lat.mean.value().col(0).segment(r * n, n),
                   lat.variance.value().col(0).segment(r * n, n)});
  }
  return out;
}

std::vector<svgp::LatentMoments>
DeepGPModel::forward_sample(const MatrixXd &X, RngStream &rng,
                            int samples) const {
  if (samples < 1) {
    throw Error("forward_sample: need at least one sample");
  }
  const int R = arch_.depth == 0 ? 1 : samples;
  auto moments = forward(X, draw_eps(X.rows(), R, rng));
  while (static_cast<int>(moments.size()) < samples) {
    moments.push_back(moments.front());
  }
  return moments;
}

double DeepGPModel::loss_with_eps(const MatrixXd &X, const VectorXd &y,
                                  double scale,
                                  const svgp::ObjectiveSpec &spec,
                                  const std::vector<MatrixXd> &eps,
                                  VectorXd *gradient) const {
  const Eigen::Index n = X.rows();
  if (n == 0) {
    throw Error("deep GP objective: empty batch");
  }
  if (y.size() != n) {
    throw DimensionError("deep GP objective: X and y row counts differ");
  }
  if (static_cast<int>(eps.size()) != arch_.depth) {
    throw DimensionError("deep GP: one eps matrix per hidden layer expected");
  }
  const int R = replicas_of(eps, n);

  ad::Tape tape;
  TapeParams bound(tape, params_, gradient != nullptr);
  StackVars stack = bind_stack(bound, arch_);
  svgp::LatentVars lat = propagate(stack, arch_, tape.constant(X), R,
                                   reparametrized(tape, eps));
  ad::Var obs = bound.get("obs_variance");
  ad::Var y_tiled = tile(tape.constant(MatrixXd(y)), R);
  ad::Var kl = total_kl(stack);

  ad::Var obj;
  if (spec.kind == svgp::ObjectiveKind::Elbo) {
    ad::Var fit = svgp::gaussian_log_pdf(y_tiled, lat.mean, obs);
    ad::Var correction = ad::cdiv(lat.variance, 2.0 * obs);
    obj = (scale / R) * ad::sum(fit - correction) - kl;
  } else {
    if (spec.beta_reg < 0.0) {
      throw Error("beta_reg must be nonnegative");
    }
    // log of the R-sample average density: a biased estimator.
    ad::Var logp = svgp::gaussian_log_pdf(y_tiled, lat.mean, lat.variance + obs);
    ad::Var per_point = ad::add_scalar(
        ad::logsumexp_rows(ad::reshape(logp, n, R)), -std::log(double(R)));
    obj = scale * ad::sum(per_point) - spec.beta_reg * kl;
  }
  ad::Var loss = -obj;
  if (!std::isfinite(loss.scalar())) {
    throw NumericalError("deep GP objective is not finite");
  }
  if (gradient != nullptr) {
    tape.backward(loss);
    *gradient = bound.gradient();
  }
  return loss.scalar();
}

double DeepGPModel::loss(const MatrixXd &X, const VectorXd &y, double scale,
                         const svgp::ObjectiveSpec &spec, RngStream &rng,
                         VectorXd *gradient) const {
  const int R = arch_.depth == 0 ? 1 : train_samples_;
  return loss_with_eps(X, y, scale, spec, draw_eps(X.rows(), R, rng), gradient);
}

std::vector<MixturePredictive> DeepGPModel::predict(const MatrixXd &X,
                                                    RngStream &rng) const {
  const double obs = likelihood().obs_variance;
  const int R = arch_.depth == 0 ? 1 : test_samples_;
  std::vector<MixturePredictive> out;
  out.reserve(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index start = 0; start < X.rows(); start += kPredictChunk) {
    const Eigen::Index len = std::min(kPredictChunk, X.rows() - start);
    const MatrixXd chunk = X.middleRows(start, len);
    const auto moments = forward(chunk, draw_eps(len, R, rng));
    for (Eigen::Index i = 0; i < len; ++i) {
      MixturePredictive mix;
      for (const auto &m : moments) {
        mix.components.push_back(
            {1.0 / static_cast<double>(R), {m.mean(i), m.variance(i) + obs}});
      }
      out.push_back(std::move(mix));
    }
  }
  return out;
}

} // namespace rulgp::dgp
