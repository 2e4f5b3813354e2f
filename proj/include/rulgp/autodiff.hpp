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

// Matrix-valued reverse-mode differentiation.
//
// Every node on a Tape holds a dense matrix. Operations record a backward
// closure only when at least one input needs a gradient, so a tape built
// from constants is a plain forward evaluator. Scalars are 1x1 matrices.

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace rulgp::ad {

using Eigen::MatrixXd;

class Tape;

class Var {
public:
  Var() = default;
  Var(Tape *tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape *tape() const { return tape_; }
  std::size_t index() const { return index_; }
  const MatrixXd &value() const;
  const MatrixXd &grad() const;
  bool requires_grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;

private:
  Tape *tape_ = nullptr;
  std::size_t index_ = 0;
};

class Tape {
public:
  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Var constant(MatrixXd value);
  Var constant(double value);
  Var variable(MatrixXd value);

  /// Seeds d(output)/d(output) = 1 and sweeps the tape backwards.
  void backward(const Var &output);

  const MatrixXd &value(std::size_t i) const { return nodes_[i].value; }
  const MatrixXd &grad(std::size_t i) const { return nodes_[i].grad; }
  bool requires_grad(std::size_t i) const { return nodes_[i].requires_grad; }

  /// Adds `g` to the gradient of node i (allocating it on first use).
  void accumulate(std::size_t i, const MatrixXd &g);

  using Backward = std::function<void(Tape &, const MatrixXd &)>;
  /// Records a new node. `backward` receives the node's own gradient.
  Var record(MatrixXd value, bool requires_grad, Backward backward);

  std::size_t size() const { return nodes_.size(); }

private:
  struct Node {
    MatrixXd value;
    MatrixXd grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

// Elementwise arithmetic. A 1x1 operand broadcasts against the other.
Var operator+(const Var &a, const Var &b);
Var operator-(const Var &a, const Var &b);
Var operator-(const Var &a);
Var operator*(double s, const Var &a);
Var add_scalar(const Var &a, double s);
Var cmul(const Var &a, const Var &b);
Var cdiv(const Var &a, const Var &b);

Var exp(const Var &a);
Var log(const Var &a);
Var sqrt(const Var &a);
Var square(const Var &a);
Var softplus(const Var &a);
Var relu(const Var &a);
/// max(a, floor); the gradient is zero where the floor is active.
Var clamp_min(const Var &a, double floor);

Var matmul(const Var &a, const Var &b);
Var transpose(const Var &a);

Var sum(const Var &a);
/// n x m -> n x 1.
Var row_sums(const Var &a);
/// n x m -> 1 x m.
Var col_sums(const Var &a);
/// A (n x m) plus a 1 x m row broadcast down the rows.
Var add_row(const Var &a, const Var &row);
/// A (n x m) times a n x 1 column broadcast across the columns.
Var mul_col(const Var &a, const Var &col);

Var hcat(const std::vector<Var> &parts);
Var vcat(const std::vector<Var> &parts);
Var col(const Var &a, Eigen::Index j);
/// Column-major reshape.
Var reshape(const Var &a, Eigen::Index rows, Eigen::Index cols);
Var diag_part(const Var &a);

/// n x S -> n x 1 of log(sum_s exp(A(i, s))).
Var logsumexp_rows(const Var &a);
/// Row or column vector -> log softmax of its entries.
Var log_softmax(const Var &a);

/// Lower-triangular factor with softplus applied to the diagonal of `raw`;
/// the strict upper triangle of `raw` is ignored.
Var lower_softplus_diag(const Var &raw);

/// Cholesky factor of A + jitter * I using the cholesky_jittered ladder.
Var cholesky(const Var &a, double base_jitter);
/// L^{-1} B for lower-triangular L.
Var solve_lower(const Var &L, const Var &B);
/// L^{-T} B for lower-triangular L.
Var solve_lower_transposed(const Var &L, const Var &B);

/// Squared-exponential kernel matrix k(X, Z) with 1 x d lengthscales and a
/// 1x1 variance.
Var rbf(const Var &X, const Var &Z, const Var &lengthscales,
        const Var &variance);

} // namespace rulgp::ad
