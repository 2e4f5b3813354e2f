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

#include "rulgp/autodiff.hpp"

#include <cmath>
#include <string>

#include "rulgp/math_core.hpp"

namespace rulgp::ad {

const MatrixXd &Var::value() const { return tape_->value(index_); }
const MatrixXd &Var::grad() const { return tape_->grad(index_); }
bool Var::requires_grad() const { return tape_->requires_grad(index_); }

double Var::scalar() const {
  const MatrixXd &v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw DimensionError("Var::scalar on a " + std::to_string(v.rows()) +
                         "x" + std::to_string(v.cols()) + " node");
  }
  return v(0, 0);
}

Var Tape::constant(MatrixXd value) {
  return record(std::move(value), false, nullptr);
}

Var Tape::constant(double value) {
  return constant(MatrixXd::Constant(1, 1, value));
}

Var Tape::variable(MatrixXd value) {
  return record(std::move(value), true, nullptr);
}

Var Tape::record(MatrixXd value, bool requires_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), MatrixXd(), requires_grad,
                        requires_grad ? std::move(backward) : Backward()});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t i, const MatrixXd &g) {
  Node &node = nodes_[i];
  if (!node.requires_grad) {
    return;
  }
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

void Tape::backward(const Var &output) {
  if (output.tape() != this) {
    throw Error("backward: output belongs to another tape");
  }
  const MatrixXd &v = output.value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw DimensionError("backward needs a scalar output");
  }
  for (auto &node : nodes_) {
    node.grad.resize(0, 0);
  }
  accumulate(output.index(), MatrixXd::Ones(1, 1));
  for (std::size_t i = output.index() + 1; i-- > 0;) {
    Node &node = nodes_[i];
    if (node.backward && node.grad.size() != 0) {
      node.backward(*this, node.grad);
    }
  }
}

namespace {

Tape &tape_of(const Var &a) { return *a.tape(); }

bool any_grad(std::initializer_list<Var> vars) {
  for (const Var &v : vars) {
    if (v.requires_grad()) {
      return true;
    }
  }
  return false;
}

bool is_scalar(const MatrixXd &m) { return m.rows() == 1 && m.cols() == 1; }

/// Sums `g` down to a 1x1 when the operand was broadcast.
MatrixXd reduce_like(const MatrixXd &operand, const MatrixXd &g) {
  if (is_scalar(operand) && !is_scalar(g)) {
    return MatrixXd::Constant(1, 1, g.sum());
  }
  return g;
}

void check_broadcast(const Var &a, const Var &b, const char *op) {
  const MatrixXd &x = a.value();
  const MatrixXd &y = b.value();
  if ((x.rows() == y.rows() && x.cols() == y.cols()) || is_scalar(x) ||
      is_scalar(y)) {
    return;
  }
  throw DimensionError(std::string(op) + ": shapes " +
                       std::to_string(x.rows()) + "x" +
                       std::to_string(x.cols()) + " and " +
                       std::to_string(y.rows()) + "x" +
                       std::to_string(y.cols()) + " do not broadcast");
}

MatrixXd expand(const MatrixXd &m, Eigen::Index rows, Eigen::Index cols) {
  if (is_scalar(m) && (rows != 1 || cols != 1)) {
    return MatrixXd::Constant(rows, cols, m(0, 0));
  }
  return m;
}

double softplus_scalar(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

MatrixXd strict_lower(const MatrixXd &m) {
  MatrixXd out = m.triangularView<Eigen::StrictlyLower>();
  return out;
}

MatrixXd lower(const MatrixXd &m) {
  MatrixXd out = m.triangularView<Eigen::Lower>();
  return out;
}

} // namespace

Var operator+(const Var &a, const Var &b) {
  check_broadcast(a, b, "add");
  const Eigen::Index r = std::max(a.rows(), b.rows());
  const Eigen::Index c = std::max(a.cols(), b.cols());
  MatrixXd out = expand(a.value(), r, c) + expand(b.value(), r, c);
  const std::size_t ia = a.index(), ib = b.index();
  return tape_of(a).record(
      std::move(out), any_grad({a, b}), [ia, ib](Tape &t, const MatrixXd &g) {
        t.accumulate(ia, reduce_like(t.value(ia), g));
        t.accumulate(ib, reduce_like(t.value(ib), g));
      });
}

Var operator-(const Var &a) { return -1.0 * a; }

Var operator-(const Var &a, const Var &b) { return a + (-b); }

Var operator*(double s, const Var &a) {
  const std::size_t ia = a.index();
  return tape_of(a).record(s * a.value(), a.requires_grad(),
                           [ia, s](Tape &t, const MatrixXd &g) {
                             t.accumulate(ia, s * g);
                           });
}

Var add_scalar(const Var &a, double s) {
  const std::size_t ia = a.index();
  MatrixXd out = a.value().array() + s;
  return tape_of(a).record(
      std::move(out), a.requires_grad(),
      [ia](Tape &t, const MatrixXd &g) { t.accumulate(ia, g); });
}

Var cmul(const Var &a, const Var &b) {
  check_broadcast(a, b, "cmul");
  const Eigen::Index r = std::max(a.rows(), b.rows());
  const Eigen::Index c = std::max(a.cols(), b.cols());
  MatrixXd out = expand(a.value(), r, c).cwiseProduct(expand(b.value(), r, c));
  const std::size_t ia = a.index(), ib = b.index();
  return tape_of(a).record(
      std::move(out), any_grad({a, b}),
      [ia, ib, r, c](Tape &t, const MatrixXd &g) {
        const MatrixXd av = expand(t.value(ia), r, c);
        const MatrixXd bv = expand(t.value(ib), r, c);
        if (t.requires_grad(ia)) {
          t.accumulate(ia, reduce_like(t.value(ia), g.cwiseProduct(bv)));
        }
        if (t.requires_grad(ib)) {
          t.accumulate(ib, reduce_like(t.value(ib), g.cwiseProduct(av)));
        }
      });
}

Var cdiv(const Var &a, const Var &b) {
  check_broadcast(a, b, "cdiv");
  const Eigen::Index r = std::max(a.rows(), b.rows());
  const Eigen::Index c = std::max(a.cols(), b.cols());
  MatrixXd out = expand(a.value(), r, c).cwiseQuotient(expand(b.value(), r, c));
  const std::size_t ia = a.index(), ib = b.index();
  return tape_of(a).record(
      std::move(out), any_grad({a, b}),
      [ia, ib, r, c](Tape &t, const MatrixXd &g) {
        const MatrixXd av = expand(t.value(ia), r, c);
        const MatrixXd bv = expand(t.value(ib), r, c);
        if (t.requires_grad(ia)) {
          t.accumulate(ia, reduce_like(t.value(ia), g.cwiseQuotient(bv)));
        }
        if (t.requires_grad(ib)) {
          const MatrixXd db =
              -(g.array() * av.array() / bv.array().square()).matrix();
          t.accumulate(ib, reduce_like(t.value(ib), db));
        }
      });
}

Var exp(const Var &a) {
  MatrixXd out = a.value().array().exp();
  const std::size_t ia = a.index();
  return tape_of(a).record(out, a.requires_grad(),
                           [ia, out](Tape &t, const MatrixXd &g) {
                             t.accumulate(ia, g.cwiseProduct(out));
                           });
}

Var log(const Var &a) {
  if ((a.value().array() <= 0.0).any()) {
    throw NumericalError("log of a nonpositive entry");
  }
  const std::size_t ia = a.index();
  return tape_of(a).record(a.value().array().log().matrix(), a.requires_grad(),
                           [ia](Tape &t, const MatrixXd &g) {
                             t.accumulate(ia, g.cwiseQuotient(t.value(ia)));
                           });
}

Var sqrt(const Var &a) {
  if ((a.value().array() < 0.0).any()) {
    throw NumericalError("sqrt of a negative entry");
  }
  const std::size_t ia = a.index();
  return tape_of(a).record(
      a.value().array().sqrt().matrix(), a.requires_grad(),
      [ia](Tape &t, const MatrixXd &g) {
        t.accumulate(ia, (0.5 * g.array() / t.value(ia).array().sqrt())
                             .matrix());
      });
}

Var square(const Var &a) {
  const std::size_t ia = a.index();
  return tape_of(a).record(a.value().array().square().matrix(),
                           a.requires_grad(),
                           [ia](Tape &t, const MatrixXd &g) {
                             t.accumulate(ia, 2.0 * g.cwiseProduct(t.value(ia)));
                           });
}

Var softplus(const Var &a) {
  const std::size_t ia = a.index();
  return tape_of(a).record(
      a.value().unaryExpr(&softplus_scalar), a.requires_grad(),
      [ia](Tape &t, const MatrixXd &g) {
        t.accumulate(ia,
                     g.cwiseProduct(t.value(ia).unaryExpr(&sigmoid_scalar)));
      });
}

Var relu(const Var &a) {
  const std::size_t ia = a.index();
  return tape_of(a).record(
      a.value().cwiseMax(0.0), a.requires_grad(),
      [ia](Tape &t, const MatrixXd &g) {
        t.accumulate(ia, (t.value(ia).array() > 0.0)
                             .select(g.array(), 0.0)
                             .matrix());
      });
}

Var clamp_min(const Var &a, double floor) {
  const std::size_t ia = a.index();
  return tape_of(a).record(
      a.value().cwiseMax(floor), a.requires_grad(),
      [ia, floor](Tape &t, const MatrixXd &g) {
        t.accumulate(ia, (t.value(ia).array() > floor)
                             .select(g.array(), 0.0)
                             .matrix());
      });
}

Var matmul(const Var &a, const Var &b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " times " +
                         std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
  const std::size_t ia = a.index(), ib = b.index();
  return tape_of(a).record(
      a.value() * b.value(), any_grad({a, b}),
      [ia, ib](Tape &t, const MatrixXd &g) {
        if (t.requires_grad(ia)) {
          t.accumulate(ia, g * t.value(ib).transpose());
        }
        if (t.requires_grad(ib)) {
          t.accumulate(ib, t.value(ia).transpose() * g);
        }
      });
}

Var transpose(const Var &a) {
  const std::size_t ia = a.index();
  return tape_of(a).record(a.value().transpose(), a.requires_grad(),
                           [ia](Tape &t, const MatrixXd &g) {
                             t.accumulate(ia, g.transpose());
                           });
}

Var sum(const Var &a) {
  const std::size_t ia = a.index();
  const Eigen::Index r = a.rows(), c = a.cols();
  return tape_of(a).record(MatrixXd::Constant(1, 1, a.value().sum()),
                           a.requires_grad(),
                           [ia, r, c](Tape &t, const MatrixXd &g) {
                             t.accumulate(ia, MatrixXd::Constant(r, c, g(0, 0)));
                           });
}

Var row_sums(const Var &a) {
  const std::size_t ia = a.index();
  const Eigen::Index c = a.cols();
  return tape_of(a).record(a.value().rowwise().sum(), a.requires_grad(),
                           [ia, c](Tape &t, const MatrixXd &g) {
                             t.accumulate(ia, g.replicate(1, c));
                           });
}

Var col_sums(const Var &a) {
  const std::size_t ia = a.index();
  const Eigen::Index r = a.rows();
  return tape_of(a).record(a.value().colwise().sum(), a.requires_grad(),
                           [ia, r](Tape &t, const MatrixXd &g) {
                             t.accumulate(ia, g.replicate(r, 1));
                           });
}

Var add_row(const Var &a, const Var &row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw DimensionError("add_row: row is " + std::to_string(row.rows()) +
                         "x" + std::to_string(row.cols()) + ", matrix has " +
                         std::to_string(a.cols()) + " columns");
  }
  MatrixXd out = a.value().rowwise() + row.value().row(0);
  const std::size_t ia = a.index(), ir = row.index();
  return tape_of(a).record(std::move(out), any_grad({a, row}),
                           [ia, ir](Tape &t, const MatrixXd &g) {
                             t.accumulate(ia, g);
                             t.accumulate(ir, g.colwise().sum());
                           });
}

Var mul_col(const Var &a, const Var &column) {
  if (column.cols() != 1 || column.rows() != a.rows()) {
    throw DimensionError("mul_col: column is " +
                         std::to_string(column.rows()) + "x" +
                         std::to_string(column.cols()) + ", matrix has " +
                         std::to_string(a.rows()) + " rows");
  }
  MatrixXd out = column.value().asDiagonal() * a.value();
  const std::size_t ia = a.index(), ic = column.index();
  return tape_of(a).record(
      std::move(out), any_grad({a, column}),
      [ia, ic](Tape &t, const MatrixXd &g) {
        if (t.requires_grad(ia)) {
          t.accumulate(ia, t.value(ic).col(0).asDiagonal() * g);
        }
        if (t.requires_grad(ic)) {
          t.accumulate(ic, g.cwiseProduct(t.value(ia)).rowwise().sum());
        }
      });
}

Var hcat(const std::vector<Var> &parts) {
  if (parts.empty()) {
    throw DimensionError("hcat of nothing");
  }
  const Eigen::Index r = parts.front().rows();
  Eigen::Index c = 0;
  bool grad = false;
  for (const Var &p : parts) {
    if (p.rows() != r) {
      throw DimensionError("hcat: row counts differ");
    }
    c += p.cols();
    grad = grad || p.requires_grad();
  }
  MatrixXd out(r, c);
  std::vector<std::pair<std::size_t, Eigen::Index>> slots;
  Eigen::Index offset = 0;
  for (const Var &p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    slots.emplace_back(p.index(), offset);
    offset += p.cols();
  }
  return tape_of(parts.front())
      .record(std::move(out), grad, [slots](Tape &t, const MatrixXd &g) {
        for (const auto &[i, off] : slots) {
          if (t.requires_grad(i)) {
            t.accumulate(i, g.middleCols(off, t.value(i).cols()));
          }
        }
      });
}

Var vcat(const std::vector<Var> &parts) {
  if (parts.empty()) {
    throw DimensionError("vcat of nothing");
  }
  const Eigen::Index c = parts.front().cols();
  Eigen::Index r = 0;
  bool grad = false;
  for (const Var &p : parts) {
    if (p.cols() != c) {
      throw DimensionError("vcat: column counts differ");
    }
    r += p.rows();
    grad = grad || p.requires_grad();
  }
  MatrixXd out(r, c);
  std::vector<std::pair<std::size_t, Eigen::Index>> slots;
  Eigen::Index offset = 0;
  for (const Var &p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    slots.emplace_back(p.index(), offset);
    offset += p.rows();
  }
  return tape_of(parts.front())
      .record(std::move(out), grad, [slots](Tape &t, const MatrixXd &g) {
        for (const auto &[i, off] : slots) {
          if (t.requires_grad(i)) {
            t.accumulate(i, g.middleRows(off, t.value(i).rows()));
          }
        }
      });
}

Var col(const Var &a, Eigen::Index j) {
  if (j < 0 || j >= a.cols()) {
    throw DimensionError("col: index " + std::to_string(j) + " out of range");
  }
  const std::size_t ia = a.index();
  return tape_of(a).record(a.value().col(j), a.requires_grad(),
                           [ia, j](Tape &t, const MatrixXd &g) {
                             MatrixXd full = MatrixXd::Zero(
                                 t.value(ia).rows(), t.value(ia).cols());
                             full.col(j) = g;
                             t.accumulate(ia, full);
                           });
}

Var reshape(const Var &a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.value().size()) {
    throw DimensionError("reshape: size mismatch");
  }
  const std::size_t ia = a.index();
  const Eigen::Index r0 = a.rows(), c0 = a.cols();
  MatrixXd out = Eigen::Map<const MatrixXd>(a.value().data(), rows, cols);
  return tape_of(a).record(std::move(out), a.requires_grad(),
                           [ia, r0, c0](Tape &t, const MatrixXd &g) {
                             t.accumulate(ia, Eigen::Map<const MatrixXd>(
                                                  g.data(), r0, c0));
                           });
}

Var diag_part(const Var &a) {
  const std::size_t ia = a.index();
  return tape_of(a).record(a.value().diagonal(), a.requires_grad(),
                           [ia](Tape &t, const MatrixXd &g) {
                             const MatrixXd &v = t.value(ia);
                             MatrixXd full = MatrixXd::Zero(v.rows(), v.cols());
                             full.diagonal() = g.col(0);
                             t.accumulate(ia, full);
                           });
}

Var logsumexp_rows(const Var &a) {
  const MatrixXd &v = a.value();
  const Eigen::VectorXd top = v.rowwise().maxCoeff();
  MatrixXd shifted = v.colwise() - top;
  const Eigen::VectorXd acc = shifted.array().exp().rowwise().sum();
  MatrixXd out = (top.array() + acc.array().log()).matrix();
  if (!out.allFinite()) {
    throw NumericalError("log-sum-exp produced a non-finite value");
  }
  const std::size_t ia = a.index();
  return tape_of(a).record(
      out, a.requires_grad(), [ia, out](Tape &t, const MatrixXd &g) {
        MatrixXd w = (t.value(ia).colwise() - out.col(0)).array().exp();
        t.accumulate(ia, g.col(0).asDiagonal() * w);
      });
}

Var log_softmax(const Var &a) {
  if (a.rows() != 1 && a.cols() != 1) {
    throw DimensionError("log_softmax expects a vector");
  }
  const MatrixXd &v = a.value();
  const double top = v.maxCoeff();
  const double lse = top + std::log((v.array() - top).exp().sum());
  MatrixXd out = v.array() - lse;
  const std::size_t ia = a.index();
  return tape_of(a).record(out, a.requires_grad(),
                           [ia, out](Tape &t, const MatrixXd &g) {
                             MatrixXd p = out.array().exp();
                             t.accumulate(ia, g - p * g.sum());
                           });
}

Var lower_softplus_diag(const Var &raw) {
  if (raw.rows() != raw.cols()) {
    throw DimensionError("lower_softplus_diag needs a square matrix");
  }
  MatrixXd out = strict_lower(raw.value());
  out.diagonal() = raw.value().diagonal().unaryExpr(&softplus_scalar);
  const std::size_t ir = raw.index();
  return tape_of(raw).record(
      std::move(out), raw.requires_grad(), [ir](Tape &t, const MatrixXd &g) {
        MatrixXd d = strict_lower(g);
        d.diagonal() = g.diagonal().cwiseProduct(
            t.value(ir).diagonal().unaryExpr(&sigmoid_scalar));
        t.accumulate(ir, d);
      });
}

Var cholesky(const Var &a, double base_jitter) {
  CholeskyResult chol = cholesky_jittered(a.value(), base_jitter);
  const std::size_t ia = a.index();
  MatrixXd L = chol.factor;
  return tape_of(a).record(
      std::move(chol.factor), a.requires_grad(),
      [ia, L](Tape &t, const MatrixXd &g) {
        // Symmetric adjoint: S = L^{-T} Phi(L^T Lbar) L^{-1}, A_bar = sym(S).
        MatrixXd P = lower(L.transpose() * lower(g));
        P.diagonal() *= 0.5;
        const auto Lv = L.triangularView<Eigen::Lower>();
        MatrixXd X = Lv.transpose().solve(P);
        MatrixXd S = Lv.transpose().solve(X.transpose()).transpose();
        t.accumulate(ia, 0.5 * (S + S.transpose()));
      });
}

Var solve_lower(const Var &L, const Var &B) {
  if (L.rows() != L.cols() || L.cols() != B.rows()) {
    throw DimensionError("solve_lower: shapes do not conform");
  }
  MatrixXd C = L.value().triangularView<Eigen::Lower>().solve(B.value());
  const std::size_t il = L.index(), ib = B.index();
  return tape_of(L).record(
      C, any_grad({L, B}), [il, ib, C](Tape &t, const MatrixXd &g) {
        const MatrixXd Bbar = t.value(il)
                                  .triangularView<Eigen::Lower>()
                                  .transpose()
                                  .solve(g);
        if (t.requires_grad(ib)) {
          t.accumulate(ib, Bbar);
        }
        if (t.requires_grad(il)) {
          t.accumulate(il, -lower(Bbar * C.transpose()));
        }
      });
}

Var solve_lower_transposed(const Var &L, const Var &B) {
  if (L.rows() != L.cols() || L.cols() != B.rows()) {
    throw DimensionError("solve_lower_transposed: shapes do not conform");
  }
  MatrixXd C =
      L.value().triangularView<Eigen::Lower>().transpose().solve(B.value());
  const std::size_t il = L.index(), ib = B.index();
  return tape_of(L).record(
      C, any_grad({L, B}), [il, ib, C](Tape &t, const MatrixXd &g) {
        const MatrixXd Bbar =
            t.value(il).triangularView<Eigen::Lower>().solve(g);
        if (t.requires_grad(ib)) {
          t.accumulate(ib, Bbar);
        }
        if (t.requires_grad(il)) {
          t.accumulate(il, -lower(C * Bbar.transpose()));
        }
      });
}

Var rbf(const Var &X, const Var &Z, const Var &lengthscales,
        const Var &variance) {
  if (lengthscales.rows() != 1 || variance.rows() != 1 ||
      variance.cols() != 1) {
    throw DimensionError("rbf: lengthscales must be 1 x d, variance 1 x 1");
  }
  Kernel kernel;
  kernel.variance = variance.scalar();
  kernel.lengthscales = lengthscales.value().row(0).transpose();
  MatrixXd K = kernel_eval(kernel, X.value(), Z.value());
  const std::size_t ix = X.index(), iz = Z.index(), il = lengthscales.index(),
                    iv = variance.index();
  return tape_of(X).record(
      K, any_grad({X, Z, lengthscales, variance}),
      [ix, iz, il, iv, K](Tape &t, const MatrixXd &g) {
        const MatrixXd &Xv = t.value(ix);
        const MatrixXd &Zv = t.value(iz);
        const Eigen::RowVectorXd ls = t.value(il).row(0);
        const double var = t.value(iv)(0, 0);
        const MatrixXd G = g.cwiseProduct(K);
        if (t.requires_grad(iv)) {
          t.accumulate(iv, MatrixXd::Constant(1, 1, G.sum() / var));
        }
        const Eigen::VectorXd rsum = G.rowwise().sum();
        const Eigen::RowVectorXd csum = G.colwise().sum();
        const MatrixXd GZ = G * Zv;             // n x d
        const MatrixXd GtX = G.transpose() * Xv; // m x d
        const Eigen::RowVectorXd inv2 = ls.array().square().inverse();
        if (t.requires_grad(ix)) {
          MatrixXd dX = -((rsum.asDiagonal() * Xv) - GZ);
          t.accumulate(ix, dX * inv2.asDiagonal());
        }
        if (t.requires_grad(iz)) {
          MatrixXd dZ = GtX - csum.transpose().asDiagonal() * Zv;
          t.accumulate(iz, dZ * inv2.asDiagonal());
        }
        if (t.requires_grad(il)) {
          Eigen::RowVectorXd dl(ls.size());
          for (Eigen::Index k = 0; k < ls.size(); ++k) {
            const double s = rsum.dot(Xv.col(k).cwiseAbs2()) +
                             csum.dot(Zv.col(k).cwiseAbs2()) -
                             2.0 * Xv.col(k).dot(GZ.col(k));
            dl(k) = s / (ls(k) * ls(k) * ls(k));
          }
          t.accumulate(il, dl);
        }
      });
}

} // namespace rulgp::ad
