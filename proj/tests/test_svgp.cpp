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

#include <cmath>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "rulgp/svgp.hpp"
#include "test_util.hpp"

namespace rulgp {
namespace {

using svgp::LikelihoodParams;
using svgp::ObjectiveKind;
using svgp::ObjectiveSpec;
using svgp::VariationalGPLayer;

// Dense reference for q(f(x)) with the same jitter on K_MM as the model.
struct DenseLatent {
  VectorXd mean, variance;
};

DenseLatent dense_latent(const VariationalGPLayer &layer, const MatrixXd &X) {
  const Eigen::Index M = layer.num_inducing();
  const MatrixXd Kmm =
      kernel_eval(layer.kernel, layer.inducing_points, layer.inducing_points) +
      kDefaultJitter * MatrixXd::Identity(M, M);
  const MatrixXd Kinv = Kmm.inverse();
  const MatrixXd Knm = kernel_eval(layer.kernel, X, layer.inducing_points);
  const MatrixXd S = layer.cov_factor * layer.cov_factor.transpose();
  const MatrixXd A = Knm * Kinv;
  DenseLatent out;
  out.mean = A * layer.variational_mean;
  out.variance.resize(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    out.variance(i) = layer.kernel.variance -
                      A.row(i).dot(Knm.row(i)) +
                      A.row(i) * S * A.row(i).transpose();
  }
  return out;
}

double dense_kl(const VariationalGPLayer &layer) {
  const Eigen::Index M = layer.num_inducing();
  const MatrixXd K =
      kernel_eval(layer.kernel, layer.inducing_points, layer.inducing_points) +
      kDefaultJitter * MatrixXd::Identity(M, M);
  const MatrixXd S = layer.cov_factor * layer.cov_factor.transpose();
  const MatrixXd Kinv = K.inverse();
  return 0.5 * ((Kinv * S).trace() +
                layer.variational_mean.dot(Kinv * layer.variational_mean) -
                static_cast<double>(M) + std::log(K.determinant()) -
                std::log(S.determinant()));
}

class SvgpFixture : public ::testing::Test {
protected:
  void SetUp() override {
    RngStream rng(11);
    layer = testing::random_layer(5, 2, rng);
    X = rng.normal_matrix(9, 2);
    y = rng.normal_matrix(9, 1).col(0);
  }
  VariationalGPLayer layer;
  MatrixXd X;
  VectorXd y;
  LikelihoodParams lik{0.3};
};

TEST_F(SvgpFixture, LatentMomentsMatchDenseAlgebra) {
  const auto lat = svgp::latent_predict(layer, X);
  const DenseLatent ref = dense_latent(layer, X);
  EXPECT_LT((lat.mean - ref.mean).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((lat.variance - ref.variance).cwiseAbs().maxCoeff(), 1e-8);
}

TEST_F(SvgpFixture, PredictAddsObservationNoise) {
  const auto lat = svgp::latent_predict(layer, X);
  const auto pred = svgp::predict(layer, lik, X);
  ASSERT_EQ(pred.size(), 9u);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    EXPECT_DOUBLE_EQ(pred[i].mean, lat.mean(i));
    EXPECT_NEAR(pred[i].variance, lat.variance(i) + 0.3, 1e-15);
  }
}

TEST_F(SvgpFixture, ObjectivesMatchHandAssembledTerms) {
  const DenseLatent ref = dense_latent(layer, X);
  const double kl = dense_kl(layer);
  double elbo_fit = 0.0, pp_fit = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double r = y(i) - ref.mean(i);
    elbo_fit += -0.5 * std::log(2.0 * std::numbers::pi * 0.3) -
                r * r / 0.6 - ref.variance(i) / 0.6;
    const double v = ref.variance(i) + 0.3;
    pp_fit += -0.5 * std::log(2.0 * std::numbers::pi * v) - r * r / (2 * v);
  }
  const double scale = 2.5;
  EXPECT_NEAR(svgp::objective(layer, lik, {ObjectiveKind::Elbo, 7.0}, X, y,
                              scale),
              scale * elbo_fit - kl, 1e-7);
  EXPECT_NEAR(svgp::objective(layer, lik, {ObjectiveKind::Ppgpr, 0.4}, X, y,
                              scale),
              scale * pp_fit - 0.4 * kl, 1e-7);
}

TEST_F(SvgpFixture, ElboIsBelowPpgprAtUnitWeight) {
  // Jensen: E_q log N(y | f, s2) <= log E_q N(y | f, s2).
  EXPECT_LE(svgp::objective(layer, lik, {ObjectiveKind::Elbo}, X, y, 1.0),
            svgp::objective(layer, lik, {ObjectiveKind::Ppgpr, 1.0}, X, y, 1.0));
}

TEST(Svgp, OptimalQWithInducingAtDataGivesLogMarginal) {
  RngStream rng(3);
  MatrixXd X(6, 1);
  X << -2.5, -1.5, -0.5, 0.5, 1.5, 2.5;
  VectorXd y = rng.normal_matrix(6, 1).col(0);
  Kernel k{1.2, VectorXd::Constant(1, 0.9)};
  const double noise = 0.2;
  const MatrixXd K = kernel_eval(k, X, X) + kDefaultJitter * MatrixXd::Identity(6, 6);
  const MatrixXd C = K + noise * MatrixXd::Identity(6, 6);
  const MatrixXd G = K * C.inverse();
  VariationalGPLayer layer;
  layer.inducing_points = X;
  layer.kernel = k;
  layer.variational_mean = G * y;
  const MatrixXd S = K - G * K;
  layer.cov_factor = Eigen::LLT<MatrixXd>(0.5 * (S + S.transpose())).matrixL();

  // Agreement is limited by the 1e-6 jitter on K_MM.
  const double elbo = svgp::objective(layer, {noise}, {ObjectiveKind::Elbo},
                                      X, y, 1.0);
  const double dense = testing::dense_log_normal(y, C);
  EXPECT_NEAR(elbo, dense, 2e-4);
  EXPECT_NEAR(dense, exact_gp_log_marginal(k, noise, X, y), 2e-4);
}

TEST_F(SvgpFixture, GradientsMatchFiniteDifferences) {
  for (ObjectiveKind kind : {ObjectiveKind::Elbo, ObjectiveKind::Ppgpr}) {
    svgp::SVGPModel model(layer, lik);
    const ObjectiveSpec spec{kind, 0.7};
    Objective f = [&](const ParamVector &p, VectorXd *g) {
      svgp::SVGPModel m(p);
      return m.loss(X, y, 1.3, spec, g);
    };
    RngStream rng(1);
    const FdReport r = fd_check(f, model.params(), 40, rng);
    EXPECT_LT(r.max_relative_error, 1e-4) << svgp::to_string(kind) << " at "
                                          << model.params().owner(
                                                 r.worst_coordinate);
  }
}

TEST_F(SvgpFixture, LossIsNegatedObjective) {
  svgp::SVGPModel model(layer, lik);
  const ObjectiveSpec spec{ObjectiveKind::Ppgpr, 1.0};
  const double loss = model.loss(X, y, 1.0, spec, nullptr);
  EXPECT_NEAR(loss, -svgp::objective(model.layer(), model.likelihood(), spec,
                                     X, y, 1.0),
              1e-10);
}

TEST_F(SvgpFixture, ValidationErrors) {
  VariationalGPLayer bad = layer;
  bad.kernel.lengthscales = VectorXd::Ones(3);
  EXPECT_THROW(svgp::latent_predict(bad, X), DimensionError);
  EXPECT_THROW(svgp::latent_predict(layer, MatrixXd::Zero(2, 3)),
               DimensionError);
  EXPECT_THROW(svgp::objective(layer, lik, {}, X, VectorXd::Zero(4), 1.0),
               DimensionError);
  EXPECT_THROW(svgp::objective(layer, lik, {}, MatrixXd::Zero(0, 2),
                               VectorXd::Zero(0), 1.0),
               Error);
  EXPECT_THROW(svgp::predict(layer, {0.0}, X), Error);
  EXPECT_THROW(svgp::objective_kind_from_string("vi"), Error);
}

TEST(Svgp, PriorRevertsFarFromInducingPoints) {
  RngStream rng(4);
  VariationalGPLayer layer = testing::random_layer(4, 1, rng);
  const auto lat = svgp::latent_predict(layer, MatrixXd::Constant(1, 1, 1e3));
  EXPECT_NEAR(lat.mean(0), 0.0, 1e-12);
  EXPECT_NEAR(lat.variance(0), layer.kernel.variance, 1e-12);
}

TEST(Svgp, CollapsedQGivesNonnegativeVariance) {
  RngStream rng(5);
  const MatrixXd Z = rng.normal_matrix(6, 2);
  VariationalGPLayer layer = svgp::initial_layer(Z, 1.0, 2.0, 1e-6);
  const auto lat = svgp::latent_predict(layer, Z);
  EXPECT_GE(lat.variance.minCoeff(), svgp::kVarianceFloor);
}

TEST(Svgp, TrainingFitsSmoothFunction) {
  RngStream rng(6);
  const Eigen::Index n = 60;
  MatrixXd X(n, 1);
  VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = -3.0 + 6.0 * static_cast<double>(i) / (n - 1);
    y(i) = std::sin(X(i, 0)) + 0.1 * rng.normal();
  }
  svgp::SVGPModel model(
      svgp::initial_layer(svgp::init_inducing(X, 10, svgp::InducingInit::KMeans,
                                              rng),
                          1.0, 1.0, 1.0),
      {0.5});
  OptimizerState opt = make_optimizer(model.params(), {0.05});
  const ObjectiveSpec spec{ObjectiveKind::Elbo};
  for (int step = 0; step < 3000; ++step) {
    model.loss(X, y, 1.0, spec, &model.params().gradient());
    adam_step(opt, model.params());
  }
  const auto pred = model.predict(X);
  double sse = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = pred[i].mean - std::sin(X(i, 0));
    sse += r * r;
  }
  EXPECT_LT(std::sqrt(sse / n), 0.08);
  EXPECT_LT(model.likelihood().obs_variance, 0.05);
}

TEST(InducingInit, RandomSubsetPicksDistinctRows) {
  RngStream rng(7);
  MatrixXd X(20, 1);
  for (int i = 0; i < 20; ++i) X(i, 0) = i;
  const MatrixXd Z = svgp::init_inducing(X, 8, svgp::InducingInit::RandomSubset,
                                         rng);
  std::set<double> rows(Z.col(0).data(), Z.col(0).data() + 8);
  EXPECT_EQ(rows.size(), 8u);
  EXPECT_THROW(svgp::init_inducing(X, 21, svgp::InducingInit::KMeans, rng),
               Error);
}

TEST(InducingInit, KMeansFindsSeparatedClusters) {
  RngStream rng(8);
  MatrixXd X(60, 2);
  const double centers[3][2] = {{-10, 0}, {0, 10}, {10, 0}};
  for (int i = 0; i < 60; ++i) {
    X(i, 0) = centers[i % 3][0] + 0.1 * rng.normal();
    X(i, 1) = centers[i % 3][1] + 0.1 * rng.normal();
  }
  // A few restarts: Lloyd from a random subset can merge two clusters.
  double best = 1e9;
  for (int attempt = 0; attempt < 5; ++attempt) {
    const MatrixXd Z = svgp::init_inducing(X, 3, svgp::InducingInit::KMeans,
                                           rng);
    double worst = 0.0;
    for (const auto &c : centers) {
      double nearest = 1e9;
      for (int k = 0; k < 3; ++k) {
        nearest = std::min(nearest, std::hypot(Z(k, 0) - c[0], Z(k, 1) - c[1]));
      }
      worst = std::max(worst, nearest);
    }
    best = std::min(best, worst);
  }
  EXPECT_LT(best, 0.1);
}

} // namespace
} // namespace rulgp
