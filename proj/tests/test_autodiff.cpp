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
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "rulgp/autodiff.hpp"
#include "rulgp/math_core.hpp"
#include "rulgp/param_engine.hpp"
#include "test_util.hpp"

namespace rulgp {
namespace {

using ad::Tape;
using ad::Var;
using Fn = std::function<Var(Tape &, const std::vector<Var> &)>;

// Compares tape gradients of a scalar function with central differences.
void expect_gradients(const Fn &f, const std::vector<MatrixXd> &inputs,
                      double tol = 1e-6) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto &x : inputs) {
    vars.push_back(tape.variable(x));
  }
  Var out = f(tape, vars);
  ASSERT_EQ(out.rows(), 1);
  ASSERT_EQ(out.cols(), 1);
  tape.backward(out);

  auto eval = [&](const std::vector<MatrixXd> &xs) {
    Tape t;
    std::vector<Var> v;
    for (const auto &x : xs) {
      v.push_back(t.constant(x));
    }
    return f(t, v).scalar();
  };
  for (std::size_t a = 0; a < inputs.size(); ++a) {
    const MatrixXd grad = vars[a].grad().size() == 0
                              ? MatrixXd::Zero(inputs[a].rows(), inputs[a].cols())
                              : vars[a].grad();
    for (Eigen::Index i = 0; i < inputs[a].size(); ++i) {
      std::vector<MatrixXd> plus = inputs, minus = inputs;
      const double h = 1e-6 * std::max(1.0, std::abs(inputs[a](i)));
      plus[a](i) += h;
      minus[a](i) -= h;
      const double fd = (eval(plus) - eval(minus)) / (2.0 * h);
      EXPECT_NEAR(grad(i), fd, tol * std::max(1.0, std::abs(fd)))
          << "input " << a << " entry " << i;
    }
  }
}

MatrixXd spd(Eigen::Index n, RngStream &rng) {
  const MatrixXd B = rng.normal_matrix(n, n);
  return B * B.transpose() + static_cast<double>(n) * MatrixXd::Identity(n, n);
}

TEST(Tape, ConstantsRecordNoBackward) {
  Tape tape;
  Var a = tape.constant(2.0);
  Var b = ad::exp(a);
  EXPECT_FALSE(b.requires_grad());
  EXPECT_NEAR(b.scalar(), std::exp(2.0), 1e-15);
}

TEST(Tape, ReusedNodeAccumulates) {
  Tape tape;
  Var x = tape.variable(MatrixXd::Constant(1, 1, 3.0));
  Var y = ad::cmul(x, x) + x;
  tape.backward(y);
  EXPECT_NEAR(x.grad()(0, 0), 7.0, 1e-15);
}

TEST(Ops, Elementwise) {
  RngStream rng(1);
  const MatrixXd a = rng.normal_matrix(3, 2);
  const MatrixXd b = rng.normal_matrix(3, 2);
  const MatrixXd pos = (rng.normal_matrix(3, 2).array().abs() + 0.5).matrix();
  expect_gradients(
      [](Tape &, const std::vector<Var> &v) {
        return ad::sum(ad::cmul(v[0], v[1]) - 2.0 * v[0] + ad::add_scalar(v[1], 3.0));
      },
      {a, b});
  expect_gradients(
      [](Tape &, const std::vector<Var> &v) {
        return ad::sum(ad::cdiv(ad::exp(v[0]), v[1]) + ad::log(v[1]) +
                       ad::sqrt(v[1]) + ad::square(v[0]));
      },
      {a, pos});
  expect_gradients(
      [](Tape &, const std::vector<Var> &v) {
        return ad::sum(ad::softplus(v[0]) + ad::relu(v[0]) +
                       ad::clamp_min(v[0], 0.1));
      },
      {a});
}

TEST(Ops, ScalarBroadcast) {
  RngStream rng(2);
  expect_gradients(
      [](Tape &, const std::vector<Var> &v) {
        return ad::sum(ad::cmul(v[0], v[1]) + ad::cdiv(v[0], v[1]) + v[1]);
      },
      {rng.normal_matrix(2, 3), MatrixXd::Constant(1, 1, 1.7)});
}

TEST(Ops, MatrixAndShape) {
  RngStream rng(3);
  const MatrixXd a = rng.normal_matrix(3, 4);
  const MatrixXd b = rng.normal_matrix(4, 2);
  const MatrixXd row = rng.normal_matrix(1, 2);
  const MatrixXd col = rng.normal_matrix(3, 1);
  expect_gradients(
      [](Tape &, const std::vector<Var> &v) {
        Var p = ad::matmul(v[0], v[1]);            // 3 x 2
        Var q = ad::add_row(p, v[2]);              // 3 x 2
        Var r = ad::mul_col(q, v[3]);              // 3 x 2
        Var s = ad::hcat({r, ad::transpose(ad::transpose(r))});
        Var t = ad::vcat({s, ad::col_sums(s)});
        Var u = ad::reshape(t, 2, 8);
        return ad::sum(ad::square(u)) + ad::sum(ad::row_sums(ad::col(s, 1))) +
               ad::sum(ad::diag_part(ad::matmul(v[0], ad::transpose(v[0]))));
      },
      {a, b, row, col});
}

TEST(Ops, LogSumExpRowsAndLogSoftmax) {
  RngStream rng(4);
  const MatrixXd a = rng.normal_matrix(4, 3);
  const MatrixXd logits = rng.normal_matrix(1, 3);
  expect_gradients(
      [](Tape &, const std::vector<Var> &v) {
        Var w = ad::log_softmax(v[1]);
        return ad::sum(ad::cmul(ad::logsumexp_rows(ad::add_row(v[0], w)),
                                ad::logsumexp_rows(v[0])));
      },
      {a, logits});

  Tape tape;
  MatrixXd big(1, 2);
  big << 1000.0, 1000.0;
  EXPECT_NEAR(ad::logsumexp_rows(tape.constant(big)).scalar(),
              1000.0 + std::log(2.0), 1e-12);
}

TEST(Ops, CholeskyAndSolves) {
  RngStream rng(5);
  const MatrixXd A = spd(4, rng);
  const MatrixXd B = rng.normal_matrix(4, 3);
  expect_gradients(
      [](Tape &, const std::vector<Var> &v) {
        // Symmetrize so the perturbation of one triangle is seen by both.
        Var S = 0.5 * (v[0] + ad::transpose(v[0]));
        Var L = ad::cholesky(S, 0.0);
        Var X = ad::solve_lower(L, v[1]);
        Var Y = ad::solve_lower_transposed(L, X);
        return ad::sum(ad::square(X)) + ad::sum(Y) +
               ad::sum(ad::log(ad::diag_part(L)));
      },
      {A, B}, 1e-5);

  Tape tape;
  Var L = ad::cholesky(tape.constant(A), 0.0);
  EXPECT_TRUE((L.value() * L.value().transpose()).isApprox(A, 1e-12));
}

TEST(Ops, LowerSoftplusDiag) {
  RngStream rng(6);
  expect_gradients(
      [](Tape &, const std::vector<Var> &v) {
        Var L = ad::lower_softplus_diag(v[0]);
        return ad::sum(ad::square(ad::matmul(L, ad::transpose(L))));
      },
      {rng.normal_matrix(3, 3)});
  Tape tape;
  MatrixXd raw(2, 2);
  raw << 0.0, 5.0, -1.0, 0.0;
  const MatrixXd L = ad::lower_softplus_diag(tape.constant(raw)).value();
  EXPECT_EQ(L(0, 1), 0.0);
  EXPECT_EQ(L(1, 0), -1.0);
  EXPECT_NEAR(L(0, 0), std::log(2.0), 1e-15);
}

TEST(Ops, RbfMatchesKernelEvalAndDifferentiates) {
  RngStream rng(7);
  const MatrixXd X = rng.normal_matrix(4, 2);
  const MatrixXd Z = rng.normal_matrix(3, 2);
  MatrixXd ls(1, 2);
  ls << 0.8, 1.3;
  const MatrixXd var = MatrixXd::Constant(1, 1, 1.4);

  Tape tape;
  const MatrixXd K = ad::rbf(tape.constant(X), tape.constant(Z),
                             tape.constant(ls), tape.constant(var))
                         .value();
  Kernel k{1.4, ls.row(0).transpose()};
  EXPECT_LT((K - kernel_eval(k, X, Z)).cwiseAbs().maxCoeff(), 1e-14);

  const MatrixXd W = rng.normal_matrix(4, 3);
  expect_gradients(
      [&W](Tape &t, const std::vector<Var> &v) {
        return ad::sum(ad::cmul(ad::rbf(v[0], v[1], v[2], v[3]),
                                t.constant(W)));
      },
      {X, Z, ls, var});
}

TEST(Ops, LogOfNonPositiveThrows) {
  Tape tape;
  EXPECT_THROW(ad::log(tape.constant(0.0)), Error);
}

} // namespace
} // namespace rulgp
