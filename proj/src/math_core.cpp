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

#include "rulgp/math_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rulgp {

void Kernel::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw Error("kernel variance must be positive, got " +
                std::to_string(variance));
  }
  if (lengthscales.size() == 0) {
    throw DimensionError("kernel has no lengthscales");
  }
  for (Eigen::Index d = 0; d < lengthscales.size(); ++d) {
    if (!(lengthscales(d) > 0.0)) {
      throw Error("lengthscale " + std::to_string(d) +
                  " must be positive, got " + std::to_string(lengthscales(d)));
    }
  }
}

MatrixXd kernel_eval(const Kernel &kernel, const MatrixXd &X,
                     const MatrixXd &Z) {
  const Eigen::Index d = kernel.dim();
  if (X.cols() != d || Z.cols() != d) {
    throw DimensionError("kernel_eval: X has " + std::to_string(X.cols()) +
                         " columns, Z has " + std::to_string(Z.cols()) +
                         ", kernel expects " + std::to_string(d));
  }
  const VectorXd inv_ls = kernel.lengthscales.cwiseInverse();
  const MatrixXd Xs = X * inv_ls.asDiagonal();
  const MatrixXd Zs = Z * inv_ls.asDiagonal();
  MatrixXd K(X.rows(), Z.rows());
  // Direct differences keep k(x, x) == variance exactly.
  for (Eigen::Index j = 0; j < Zs.rows(); ++j) {
    for (Eigen::Index i = 0; i < Xs.rows(); ++i) {
      double r2 = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        const double diff = Xs(i, k) - Zs(j, k);
        r2 += diff * diff;
      }
      K(i, j) = kernel.variance * std::exp(-0.5 * r2);
    }
  }
  return K;
}

CholeskyResult cholesky_jittered(const MatrixXd &A, double base_jitter) {
  if (A.rows() != A.cols()) {
    throw DimensionError("cholesky_jittered: matrix is " +
                         std::to_string(A.rows()) + "x" +
                         std::to_string(A.cols()));
  }
  if (base_jitter < 0.0) {
    throw Error("cholesky_jittered: negative base jitter");
  }
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error("cholesky_jittered: matrix is not symmetric");
  }

  double jitter = base_jitter;
  for (int attempt = 0; attempt <= kJitterRetries; ++attempt) {
    MatrixXd work = A;
    work.diagonal().array() += jitter;
    Eigen::LLT<MatrixXd> llt(work);
    if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().allFinite()) {
      return {llt.matrixL(), jitter};
    }
    if (attempt == kJitterRetries) {
      break;
    }
    jitter = jitter > 0.0 ? jitter * 10.0 : kDefaultJitter;
  }
  throw NumericalError("cholesky_jittered: factorization failed with jitter " +
                           std::to_string(jitter),
                       jitter);
}

double mvn_kl(const MultivariateNormal &q, const MultivariateNormal &p) {
  const Eigen::Index m = q.mean.size();
  if (p.mean.size() != m || q.covariance_factor.rows() != m ||
      q.covariance_factor.cols() != m || p.covariance_factor.rows() != m ||
      p.covariance_factor.cols() != m) {
    throw DimensionError("mvn_kl: dimension mismatch between q (" +
                         std::to_string(m) + ") and p (" +
                         std::to_string(p.mean.size()) + ")");
  }
  const auto Lp = p.covariance_factor.triangularView<Eigen::Lower>();
  const MatrixXd A = Lp.solve(q.covariance_factor.triangularView<Eigen::Lower>()
                                  .toDenseMatrix());
  const VectorXd b = Lp.solve(p.mean - q.mean);
  const double logdet_p =
      2.0 * p.covariance_factor.diagonal().array().log().sum();
  const double logdet_q =
      2.0 * q.covariance_factor.diagonal().array().log().sum();
  const double kl = 0.5 * (A.squaredNorm() + b.squaredNorm() -
                           static_cast<double>(m) + logdet_p - logdet_q);
  return std::max(0.0, kl);
}

double gaussian_log_pdf(double y, double mean, double variance) {
  if (!(variance > 0.0)) {
    throw NumericalError("gaussian density needs positive variance, got " +
                         std::to_string(variance));
  }
  const double r = y - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) -
         0.5 * r * r / variance;
}

double gaussian_nll(double y, const GaussianDist &dist) {
  return -gaussian_log_pdf(y, dist.mean, dist.variance);
}

QuadratureRule gauss_hermite(int num_sites) {
  if (num_sites < 1 || num_sites > 50) {
    throw Error("gauss_hermite: number of sites must be in [1, 50], got " +
                std::to_string(num_sites));
  }
  const int S = num_sites;

  // Golub-Welsch on the Jacobi matrix of He_n gives starting nodes.
  MatrixXd J = MatrixXd::Zero(S, S);
  for (int k = 1; k < S; ++k) {
    J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(J);
  VectorXd sites = eig.eigenvalues();

  // psi_n = He_n / sqrt(n!) keeps the recurrence bounded for large S.
  auto orthonormal = [S](double x, double &psi_prev) {
    double prev = 0.0;
    double cur = 1.0;
    for (int n = 0; n < S; ++n) {
      const double next =
          (x * cur - std::sqrt(static_cast<double>(n)) * prev) /
          std::sqrt(static_cast<double>(n + 1));
      prev = cur;
      cur = next;
    }
    psi_prev = prev;
    return cur;
  };

  VectorXd weights(S);
  for (int i = 0; i < S; ++i) {
    double x = sites(i);
    double psi_prev = 0.0;
    for (int it = 0; it < 10; ++it) {
      const double psi = orthonormal(x, psi_prev);
      const double deriv = std::sqrt(static_cast<double>(S)) * psi_prev;
      const double step = psi / deriv;
      x -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) {
        break;
      }
    }
    orthonormal(x, psi_prev);
    sites(i) = x;
    weights(i) = 1.0 / (static_cast<double>(S) * psi_prev * psi_prev);
  }
  // Symmetric rule: pin exact symmetry so odd moments vanish.
  for (int i = 0; i < S / 2; ++i) {
    const double x = 0.5 * (sites(S - 1 - i) - sites(i));
    const double w = 0.5 * (weights(i) + weights(S - 1 - i));
    sites(i) = -x;
    sites(S - 1 - i) = x;
    weights(i) = weights(S - 1 - i) = w;
  }
  if (S % 2 == 1) {
    sites(S / 2) = 0.0;
  }
  weights /= weights.sum();
  return {sites, weights};
}

double gaussian_cdf(double x, double mean, double stddev) {
  if (!(stddev > 0.0)) {
    throw Error("gaussian_cdf: standard deviation must be positive, got " +
                std::to_string(stddev));
  }
  const double z = (x - mean) / stddev;
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) {
    return -std::numeric_limits<double>::infinity();
  }
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) {
    return top;
  }
  double acc = 0.0;
  for (double v : values) {
    acc += std::exp(v - top);
  }
  return top + std::log(acc);
}

namespace {

void check_gp_inputs(const Kernel &kernel, double noise, const MatrixXd &X,
                     const VectorXd &y) {
  kernel.validate();
  if (!(noise > 0.0)) {
    throw Error("exact GP noise must be positive");
  }
  if (X.rows() != y.size()) {
    throw DimensionError("exact GP: X has " + std::to_string(X.rows()) +
                         " rows but y has " + std::to_string(y.size()));
  }
  if (X.rows() > 2000) {
    throw Error("exact GP oracle is limited to 2000 training rows");
  }
}

} // namespace

GaussianDist exact_gp_predict(const Kernel &kernel, double noise,
                              const MatrixXd &X, const VectorXd &y,
                              const VectorXd &x_star) {
  check_gp_inputs(kernel, noise, X, y);
  MatrixXd K = kernel_eval(kernel, X, X);
  K.diagonal().array() += noise;
  const CholeskyResult chol = cholesky_jittered(K, 0.0);
  const auto L = chol.factor.triangularView<Eigen::Lower>();

  const MatrixXd xs = x_star.transpose();
  const VectorXd k = kernel_eval(kernel, X, xs).col(0);
  const VectorXd alpha = L.transpose().solve(L.solve(y));
  const VectorXd v = L.solve(k);
  return {k.dot(alpha), kernel.variance - v.squaredNorm() + noise};
}

double exact_gp_log_marginal(const Kernel &kernel, double noise,
                             const MatrixXd &X, const VectorXd &y) {
  check_gp_inputs(kernel, noise, X, y);
  MatrixXd K = kernel_eval(kernel, X, X);
  K.diagonal().array() += noise;
  const CholeskyResult chol = cholesky_jittered(K, 0.0);
  const VectorXd a = chol.factor.triangularView<Eigen::Lower>().solve(y);
  const double n = static_cast<double>(y.size());
  return -0.5 * a.squaredNorm() -
         chol.factor.diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

} // namespace rulgp
