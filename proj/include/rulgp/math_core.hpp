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

#pragma once

#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rulgp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

/// Raised when a factorization or a log/exp evaluation produces something
/// unusable. `jitter()` is the last diagonal inflation that was attempted.
class NumericalError : public Error {
public:
  explicit NumericalError(const std::string &what, double jitter = 0.0)
      : Error(what), jitter_(jitter) {}
  double jitter() const { return jitter_; }

private:
  double jitter_;
};

/// Squared-exponential kernel with one lengthscale per input dimension.
struct Kernel {
  double variance = 1.0;
  VectorXd lengthscales;

  Eigen::Index dim() const { return lengthscales.size(); }
  void validate() const;
};

struct GaussianDist {
  double mean = 0.0;
  double variance = 1.0;
};

/// N(mean, L L^T) with L stored instead of the covariance.
struct MultivariateNormal {
  VectorXd mean;
  MatrixXd covariance_factor;
};

/// Sites and probability weights for expectations under N(0, 1).
struct QuadratureRule {
  VectorXd sites;
  VectorXd weights;
};

/// K(i, j) = variance * exp(-0.5 * sum_d (X(i, d) - Z(j, d))^2 / l_d^2).
MatrixXd kernel_eval(const Kernel &kernel, const MatrixXd &X,
                     const MatrixXd &Z);

struct CholeskyResult {
  MatrixXd factor;
  double jitter = 0.0;
};

inline constexpr double kDefaultJitter = 1e-6;
inline constexpr int kJitterRetries = 5;

/// Factor A + jitter * I. The first attempt uses `base_jitter`; each failure
/// multiplies the jitter by 10 (a zero base falls back to 1e-6) for at most
/// five retries. Throws NumericalError carrying the last jitter tried.
CholeskyResult cholesky_jittered(const MatrixXd &A,
                                 double base_jitter = kDefaultJitter);

/// KL(q || p) for two full-rank Gaussians given by Cholesky factors.
double mvn_kl(const MultivariateNormal &q, const MultivariateNormal &p);

double gaussian_log_pdf(double y, double mean, double variance);
double gaussian_nll(double y, const GaussianDist &dist);

/// Probabilists' Gauss-Hermite rule normalized to the standard normal,
/// exact for polynomials of degree <= 2S - 1. Sites are ascending.
QuadratureRule gauss_hermite(int num_sites);

double gaussian_cdf(double x, double mean, double stddev);

double log_sum_exp(std::span<const double> values);

/// Dense GP regression posterior at one test input, noise included.
/// Test oracle only; cost is cubic in the number of rows of X.
GaussianDist exact_gp_predict(const Kernel &kernel, double noise,
                              const MatrixXd &X, const VectorXd &y,
                              const VectorXd &x_star);

/// log N(y | 0, K + noise * I), dense.
double exact_gp_log_marginal(const Kernel &kernel, double noise,
                             const MatrixXd &X, const VectorXd &y);

} // namespace rulgp
