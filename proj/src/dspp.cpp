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

#include "rulgp/dspp.hpp"

#include <algorithm>
#include <cmath>

namespace rulgp::dspp {

namespace {

constexpr Eigen::Index kPredictChunk = 256;

} // namespace

VectorXd SigmaPointSet::weights() const {
  const double top = logits.maxCoeff();
  VectorXd w = (logits.array() - top).exp().matrix();
  return w / w.sum();
}

void SigmaPointSet::validate() const {
  if (logits.size() < 1) {
    throw Error("sigma points: need at least one component");
  }
  if (sites.rows() != logits.size()) {
    throw DimensionError("sigma points: sites have " +
                         std::to_string(sites.rows()) + " rows for " +
                         std::to_string(logits.size()) + " components");
  }
  if (!logits.allFinite() || !sites.allFinite()) {
    throw Error("sigma points: non-finite entries");
  }
}

SigmaPointSet init_sigma_points(int num_points, int total_hidden) {
  if (num_points < 1) {
    throw Error("sigma points: S must be positive, got " +
                std::to_string(num_points));
  }
  if (total_hidden < 0) {
    throw Error("sigma points: negative hidden GP count");
  }
  const QuadratureRule rule = gauss_hermite(num_points);
  SigmaPointSet out;
  out.logits = rule.weights.array().log().matrix();
  out.sites = rule.sites.replicate(1, total_hidden);
  return out;
}

void add_sigma_params(ParamVector &params, const SigmaPointSet &points) {
  points.validate();
  params.add_raw(kLogitsName, points.logits.transpose(), Transform::Simplex);
  if (points.sites.cols() > 0) {
    params.add(kSitesName, points.sites);
  }
}

SigmaPointSet read_sigma_points(const ParamVector &params, int total_hidden) {
  SigmaPointSet out;
  out.logits = params.raw(kLogitsName).transpose();
  if (total_hidden > 0) {
    out.sites = params.decode(kSitesName);
  } else {
    out.sites = MatrixXd(out.logits.size(), 0);
  }
  if (out.sites.cols() != total_hidden) {
    throw DimensionError("sigma points: sites have " +
                         std::to_string(out.sites.cols()) +
                         " columns, architecture has " +
                         std::to_string(total_hidden) + " hidden GPs");
  }
  out.validate();
  return out;
}

DSPPModel::DSPPModel(const dgp::Architecture &arch, ParamVector params,
                     double beta_reg)
    : arch_(arch), params_(std::move(params)), beta_reg_(beta_reg) {
  arch_.validate();
  if (beta_reg_ < 0.0) {
    throw Error("beta_reg must be nonnegative");
  }
  for (int l = 0; l < arch_.depth; ++l) {
    for (int w = 0; w < arch_.width; ++w) {
      svgp::read_layer(params_, dgp::hidden_prefix(l, w)).validate();
    }
  }
  svgp::read_layer(params_, dgp::kOutputPrefix).validate();
  sigma_points();
  likelihood();
}

DSPPModel DSPPModel::initialize(const dgp::Architecture &arch,
                                const MatrixXd &input_centers,
                                const dgp::StackInit &init,
                                double obs_variance, int num_points,
                                double beta_reg, RngStream &rng) {
  ParamVector params;
  dgp::add_stack_params(params, arch, input_centers, init, rng);
  params.add("obs_variance", MatrixXd::Constant(1, 1, obs_variance),
             Transform::Softplus);
  add_sigma_params(params, init_sigma_points(num_points, arch.total_hidden()));
  return DSPPModel(arch, std::move(params), beta_reg);
}

int DSPPModel::num_points() const {
  return static_cast<int>(params_.slice(kLogitsName).size());
}

int DSPPModel::replicas() const { return arch_.depth == 0 ? 1 : num_points(); }

SigmaPointSet DSPPModel::sigma_points() const {
  return read_sigma_points(params_, arch_.total_hidden());
}

svgp::LikelihoodParams DSPPModel::likelihood() const {
  return {params_.decode("obs_variance")(0, 0)};
}

namespace {

struct StackPass {
  dgp::StackVars stack;
  svgp::LatentVars latent; // replicas * n rows
};

// Every hidden GP is evaluated at its own site for each component:
// g = mu + xi_s * sigma, with rows ordered component-major.
StackPass run_stack(TapeParams &bound, const dgp::Architecture &arch,
                    const MatrixXd &X, int replicas) {
  ad::Tape &tape = bound.tape();
  const Eigen::Index n = X.rows();
  StackPass pass;
  pass.stack = dgp::bind_stack(bound, arch);
  ad::Var sites;
  if (arch.total_hidden() > 0) {
    sites = bound.get(kSitesName);
  }
  const ad::Var ones = tape.constant(MatrixXd::Ones(n, 1));
  auto sampler = [&](int, int, int global, const svgp::LatentVars &lat) {
    ad::Var xi = ad::transpose(ad::col(sites, global)); // 1 x S
    ad::Var spread = ad::reshape(ad::matmul(ones, xi), n * replicas, 1);
    return lat.mean + ad::cmul(spread, ad::sqrt(lat.variance));
  };
  pass.latent =
      dgp::propagate(pass.stack, arch, tape.constant(X), replicas, sampler);
  return pass;
}

} // namespace

std::vector<svgp::LatentMoments> DSPPModel::forward(const MatrixXd &X) const {
  const Eigen::Index n = X.rows();
  const int R = replicas();
  ad::Tape tape;
  TapeParams bound(tape, params_, false);
  StackPass pass = run_stack(bound, arch_, X, R);
  std::vector<svgp::LatentMoments> out;
  for (int r = 0; r < R; ++r) {
    out.push_back({pass.latent.mean.value().col(0).segment(r * n, n),
                   pass.latent.variance.value().col(0).segment(r * n, n)});
  }
  return out;
}

double DSPPModel::loss(const MatrixXd &X, const VectorXd &y, double scale,
                       VectorXd *gradient) const {
  const Eigen::Index n = X.rows();
  if (n == 0) {
    throw Error("DSPP objective: empty batch");
  }
  if (y.size() != n) {
    throw DimensionError("DSPP objective: X and y row counts differ");
  }
  const int R = replicas();
  ad::Tape tape;
  TapeParams bound(tape, params_, gradient != nullptr);
  StackPass pass = run_stack(bound, arch_, X, R);
  ad::Var obs = bound.get("obs_variance");
  ad::Var y_tiled = ad::vcat(std::vector<ad::Var>(
      static_cast<std::size_t>(R), tape.constant(MatrixXd(y))));
  ad::Var logp = svgp::gaussian_log_pdf(y_tiled, pass.latent.mean,
                                        pass.latent.variance + obs);
  ad::Var per_component = ad::reshape(logp, n, R);
  if (arch_.depth > 0) {
    ad::Var log_w = ad::log_softmax(bound.get_raw(kLogitsName));
    per_component = ad::add_row(per_component, log_w);
  }
  ad::Var per_point = ad::logsumexp_rows(per_component);
  ad::Var obj = scale * ad::sum(per_point) -
                beta_reg_ * dgp::total_kl(pass.stack);
  ad::Var loss = -obj;
  if (!std::isfinite(loss.scalar())) {
    throw NumericalError("DSPP objective is not finite");
  }
  if (gradient != nullptr) {
    tape.backward(loss);
    *gradient = bound.gradient();
  }
  return loss.scalar();
}

std::vector<MixturePredictive> DSPPModel::predict(const MatrixXd &X) const {
  const double obs = likelihood().obs_variance;
  const VectorXd weights =
      arch_.depth > 0 ? sigma_points().weights() : VectorXd::Ones(1);
  std::vector<MixturePredictive> out;
  out.reserve(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index start = 0; start < X.rows(); start += kPredictChunk) {
    const Eigen::Index len = std::min(kPredictChunk, X.rows() - start);
    const auto moments = forward(X.middleRows(start, len));
    for (Eigen::Index i = 0; i < len; ++i) {
      MixturePredictive mix;
      for (std::size_t s = 0; s < moments.size(); ++s) {
        mix.components.push_back(
            {weights(static_cast<Eigen::Index>(s)),
             {moments[s].mean(i), moments[s].variance(i) + obs}});
      }
      out.push_back(std::move(mix));
    }
  }
  return out;
}

} // namespace rulgp::dspp
