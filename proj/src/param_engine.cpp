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

#include "rulgp/param_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace rulgp {

std::string to_string(Transform t) {
  switch (t) {
  case Transform::Identity:
    return "identity";
  case Transform::Softplus:
    return "softplus";
  case Transform::Simplex:
    return "simplex";
  case Transform::LowerSoftplusDiag:
    return "lower_softplus_diag";
  }
  return "identity";
}

Transform transform_from_string(const std::string &name) {
  if (name == "identity") return Transform::Identity;
  if (name == "softplus") return Transform::Softplus;
  if (name == "simplex") return Transform::Simplex;
  if (name == "lower_softplus_diag") return Transform::LowerSoftplusDiag;
  throw Error("unknown transform '" + name + "'");
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
  if (!(y > 0.0)) {
    throw Error("softplus_inverse needs a positive value, got " +
                std::to_string(y));
  }
  return y + std::log(-std::expm1(-y));
}

MatrixXd decode_raw(const MatrixXd &raw, Transform transform) {
  switch (transform) {
  case Transform::Identity:
    return raw;
  case Transform::Softplus:
    return raw.unaryExpr([](double x) { return softplus(x); });
  case Transform::Simplex: {
    const double top = raw.maxCoeff();
    MatrixXd w = (raw.array() - top).exp();
    return w / w.sum();
  }
  case Transform::LowerSoftplusDiag: {
    MatrixXd L = raw.triangularView<Eigen::StrictlyLower>();
    L.diagonal() = raw.diagonal().unaryExpr([](double x) { return softplus(x); });
    return L;
  }
  }
  return raw;
}

MatrixXd encode_constrained(const MatrixXd &constrained, Transform transform) {
  switch (transform) {
  case Transform::Identity:
    return constrained;
  case Transform::Softplus:
    return constrained.unaryExpr([](double y) { return softplus_inverse(y); });
  case Transform::Simplex: {
    if ((constrained.array() < 0.0).any()) {
      throw Error("simplex encode: negative weight");
    }
    const double tiny = std::numeric_limits<double>::min();
    return constrained.unaryExpr(
        [tiny](double w) { return std::log(std::max(w, tiny)); });
  }
  case Transform::LowerSoftplusDiag: {
    if (constrained.rows() != constrained.cols()) {
      throw DimensionError("Cholesky factor slice must be square");
    }
    MatrixXd raw = constrained.triangularView<Eigen::StrictlyLower>();
    raw.diagonal() = constrained.diagonal().unaryExpr(
        [](double y) { return softplus_inverse(y); });
    return raw;
  }
  }
  return constrained;
}

void ParamVector::add(const std::string &name, const MatrixXd &constrained,
                      Transform transform) {
  add_raw(name, encode_constrained(constrained, transform), transform);
}

void ParamVector::add_raw(const std::string &name, const MatrixXd &raw,
                          Transform transform) {
  if (index_.count(name) != 0) {
    throw Error("duplicate parameter '" + name + "'");
  }
  ParamSlice s;
  s.name = name;
  s.offset = values_.size();
  s.rows = raw.rows();
  s.cols = raw.cols();
  s.transform = transform;
  const Eigen::Index old = values_.size();
  values_.conservativeResize(old + s.size());
  values_.segment(old, s.size()) =
      Eigen::Map<const VectorXd>(raw.data(), s.size());
  gradient_ = VectorXd::Zero(values_.size());
  index_[name] = slices_.size();
  slices_.push_back(s);
}

bool ParamVector::contains(const std::string &name) const {
  return index_.count(name) != 0;
}

const ParamSlice &ParamVector::slice(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw Error("unknown parameter '" + name + "'");
  }
  return slices_[it->second];
}

MatrixXd ParamVector::raw(const std::string &name) const {
  const ParamSlice &s = slice(name);
  return Eigen::Map<const MatrixXd>(values_.data() + s.offset, s.rows, s.cols);
}

MatrixXd ParamVector::decode(const std::string &name) const {
  return decode_raw(raw(name), slice(name).transform);
}

void ParamVector::encode(const std::string &name, const MatrixXd &constrained) {
  const ParamSlice &s = slice(name);
  if (constrained.rows() != s.rows || constrained.cols() != s.cols) {
    throw DimensionError("encode '" + name + "': shape mismatch");
  }
  const MatrixXd r = encode_constrained(constrained, s.transform);
  values_.segment(s.offset, s.size()) =
      Eigen::Map<const VectorXd>(r.data(), s.size());
}

void ParamVector::set_trainable(const std::string &name, bool trainable) {
  slice(name);
  slices_[index_.at(name)].trainable = trainable;
}

void ParamVector::set_trainable_prefix(const std::string &prefix,
                                       bool trainable) {
  for (auto &s : slices_) {
    if (s.name.rfind(prefix, 0) == 0) {
      s.trainable = trainable;
    }
  }
}

const std::string &ParamVector::owner(Eigen::Index i) const {
  for (const auto &s : slices_) {
    if (i >= s.offset && i < s.offset + s.size()) {
      return s.name;
    }
  }
  throw Error("coordinate " + std::to_string(i) + " outside the layout");
}

TapeParams::TapeParams(ad::Tape &tape, const ParamVector &params,
                       bool with_grad)
    : tape_(tape), params_(params), with_grad_(with_grad) {}

ad::Var TapeParams::get(const std::string &name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) {
    return it->second.second;
  }
  const ParamSlice &s = params_.slice(name);
  MatrixXd raw = params_.raw(name);
  ad::Var leaf = (with_grad_ && s.trainable) ? tape_.variable(std::move(raw))
                                             : tape_.constant(std::move(raw));
  ad::Var decoded = leaf;
  switch (s.transform) {
  case Transform::Identity:
    break;
  case Transform::Softplus:
    decoded = ad::softplus(leaf);
    break;
  case Transform::Simplex:
    decoded = ad::exp(ad::log_softmax(leaf));
    break;
  case Transform::LowerSoftplusDiag:
    decoded = ad::lower_softplus_diag(leaf);
    break;
  }
  bound_.emplace(name, std::make_pair(leaf, decoded));
  return decoded;
}

ad::Var TapeParams::get_raw(const std::string &name) {
  get(name);
  return bound_.at(name).first;
}

VectorXd TapeParams::gradient() const {
  VectorXd g = VectorXd::Zero(params_.size());
  for (const auto &[name, vars] : bound_) {
    const ad::Var &leaf = vars.first;
    if (!leaf.requires_grad() || leaf.grad().size() == 0) {
      continue;
    }
    const ParamSlice &s = params_.slice(name);
    g.segment(s.offset, s.size()) =
        Eigen::Map<const VectorXd>(leaf.grad().data(), s.size());
  }
  return g;
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::uniform() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

bool RngStream::bernoulli(double p) {
  return std::bernoulli_distribution(p)(engine_);
}

MatrixXd RngStream::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
  MatrixXd out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      out(i, j) = normal();
    }
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over the combined words.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RngStream RngStream::substream(std::uint64_t index) const {
  return RngStream(mix_seed(seed_, index));
}

OptimizerState make_optimizer(const ParamVector &params, AdamConfig config) {
  if (!(config.learning_rate > 0.0)) {
    throw Error("learning rate must be positive");
  }
  OptimizerState state;
  state.config = config;
  state.first_moment = VectorXd::Zero(params.size());
  state.second_moment = VectorXd::Zero(params.size());
  return state;
}

void adam_step(OptimizerState &state, ParamVector &params) {
  const VectorXd &g = params.gradient();
  if (state.first_moment.size() != params.size() ||
      g.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state does not match params");
  }
  std::set<std::string> bad;
  for (const auto &s : params.layout()) {
    if (s.trainable && !g.segment(s.offset, s.size()).allFinite()) {
      bad.insert(s.name);
    }
  }
  if (!bad.empty()) {
    std::string names;
    for (const auto &n : bad) {
      names += (names.empty() ? "" : ", ") + n;
    }
    throw Error("adam_step: non-finite gradient in " + names);
  }

  const AdamConfig &c = state.config;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  VectorXd &values = params.values();
  for (const auto &s : params.layout()) {
    if (!s.trainable) {
      continue;
    }
    for (Eigen::Index i = s.offset; i < s.offset + s.size(); ++i) {
      double &m = state.first_moment(i);
      double &v = state.second_moment(i);
      m = c.beta1 * m + (1.0 - c.beta1) * g(i);
      v = c.beta2 * v + (1.0 - c.beta2) * g(i) * g(i);
      const double m_hat = m / correction1;
      const double v_hat = v / correction2;
      values(i) -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

FdReport fd_check(const Objective &loss, const ParamVector &params,
                  int probes, RngStream &rng) {
  std::vector<Eigen::Index> candidates;
  for (const auto &s : params.layout()) {
    if (s.trainable) {
      for (Eigen::Index i = 0; i < s.size(); ++i) {
        candidates.push_back(s.offset + i);
      }
    }
  }
  if (candidates.empty() || probes < 1) {
    throw Error("fd_check: nothing to probe");
  }
  std::shuffle(candidates.begin(), candidates.end(), rng.engine());
  if (static_cast<std::size_t>(probes) < candidates.size()) {
    candidates.resize(static_cast<std::size_t>(probes));
  }
  std::sort(candidates.begin(), candidates.end());

  VectorXd analytic;
  const double base = loss(params, &analytic);
  if (!std::isfinite(base)) {
    throw NumericalError("fd_check: non-finite loss at the base point");
  }

  FdReport report;
  report.coordinates = candidates;
  ParamVector probe = params;
  for (Eigen::Index i : candidates) {
    const double theta = params.values()(i);
    const double h = 1e-5 * std::max(1.0, std::abs(theta));
    probe.values()(i) = theta + h;
    const double up = loss(probe, nullptr);
    probe.values()(i) = theta - h;
    const double down = loss(probe, nullptr);
    probe.values()(i) = theta;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("fd_check: non-finite loss probing coordinate " +
                           std::to_string(i) + " (" + params.owner(i) + ")");
    }
    const double fd = (up - down) / (2.0 * h);
    const double err = std::abs(analytic(i) - fd) / (std::abs(fd) + 1e-8);
    if (err > report.max_relative_error || report.worst_coordinate < 0) {
      report.max_relative_error = std::max(report.max_relative_error, err);
      report.worst_coordinate = i;
    }
  }
  return report;
}

std::vector<Batch> minibatch_epoch(Eigen::Index n, Eigen::Index batch_size,
                                   RngStream &rng) {
  if (batch_size < 1) {
    throw Error("batch size must be at least 1");
  }
  if (n < 1) {
    throw Error("cannot batch an empty dataset");
  }
  batch_size = std::min(batch_size, n);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng.engine());

  std::vector<Batch> batches;
  for (Eigen::Index start = 0; start < n; start += batch_size) {
    const Eigen::Index stop = std::min(n, start + batch_size);
    Batch b;
    b.indices.assign(order.begin() + start, order.begin() + stop);
    b.scale = static_cast<double>(n) / static_cast<double>(stop - start);
    batches.push_back(std::move(b));
  }
  return batches;
}

MatrixXd take_rows(const MatrixXd &X, const std::vector<Eigen::Index> &rows) {
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
  }
  return out;
}

VectorXd take_rows(const VectorXd &y, const std::vector<Eigen::Index> &rows) {
  VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = y(rows[i]);
  }
  return out;
}

} // namespace rulgp
