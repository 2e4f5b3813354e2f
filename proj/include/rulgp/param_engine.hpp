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

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rulgp/autodiff.hpp"
#include "rulgp/math_core.hpp"

namespace rulgp {

/// How a raw slice maps to its constrained value.
enum class Transform {
  Identity,
  Softplus,          // positive entries
  Simplex,           // softmax over the whole slice
  LowerSoftplusDiag, // Cholesky factor: strict lower raw, softplus diagonal
};

std::string to_string(Transform t);
Transform transform_from_string(const std::string &name);

struct ParamSlice {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Transform transform = Transform::Identity;
  bool trainable = true;

  Eigen::Index size() const { return rows * cols; }
};

double softplus(double x);
double softplus_inverse(double y);

/// Flat raw parameter vector with a named layout and a gradient of equal
/// length. Slices are appended contiguously, so they are disjoint and cover
/// the vector by construction.
class ParamVector {
public:
  /// Appends a slice initialized from its constrained value.
  void add(const std::string &name, const MatrixXd &constrained,
           Transform transform = Transform::Identity);
  /// Appends a slice from raw (unconstrained) values.
  void add_raw(const std::string &name, const MatrixXd &raw,
               Transform transform = Transform::Identity);

  bool contains(const std::string &name) const;
  const ParamSlice &slice(const std::string &name) const;
  const std::vector<ParamSlice> &layout() const { return slices_; }

  MatrixXd raw(const std::string &name) const;
  MatrixXd decode(const std::string &name) const;
  void encode(const std::string &name, const MatrixXd &constrained);

  void set_trainable(const std::string &name, bool trainable);
  /// Freezes or unfreezes every slice whose name starts with `prefix`.
  void set_trainable_prefix(const std::string &prefix, bool trainable);

  VectorXd &values() { return values_; }
  const VectorXd &values() const { return values_; }
  VectorXd &gradient() { return gradient_; }
  const VectorXd &gradient() const { return gradient_; }
  Eigen::Index size() const { return values_.size(); }

  /// Name of the slice that owns flat coordinate `i`.
  const std::string &owner(Eigen::Index i) const;

private:
  std::vector<ParamSlice> slices_;
  std::map<std::string, std::size_t> index_;
  VectorXd values_;
  VectorXd gradient_;
};

MatrixXd decode_raw(const MatrixXd &raw, Transform transform);
MatrixXd encode_constrained(const MatrixXd &constrained, Transform transform);

/// Binds ParamVector slices onto a tape. `get` returns the constrained value
/// as a differentiable node; `gradient` scatters raw-space gradients back.
/// With `with_grad == false` every slice enters as a constant.
class TapeParams {
public:
  TapeParams(ad::Tape &tape, const ParamVector &params, bool with_grad);

  ad::Var get(const std::string &name);
  /// The unconstrained leaf behind `name`.
  ad::Var get_raw(const std::string &name);
  ad::Tape &tape() { return tape_; }
  bool with_grad() const { return with_grad_; }

  /// Call after tape.backward(); slices never touched get zero gradient.
  VectorXd gradient() const;

private:
  ad::Tape &tape_;
  const ParamVector &params_;
  bool with_grad_;
  std::map<std::string, std::pair<ad::Var, ad::Var>> bound_; // raw, decoded
};

/// Seeded pseudo-random stream. Identical seed and call sequence give
/// identical draws.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64 &engine() { return engine_; }

  double normal();
  double uniform();
  bool bernoulli(double p);
  MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);
  std::uint64_t next_u64() { return engine_(); }

  /// Independent stream derived from (seed, index).
  RngStream substream(std::uint64_t index) const;

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  long step_count = 0;
  VectorXd first_moment;
  VectorXd second_moment;
};

OptimizerState make_optimizer(const ParamVector &params, AdamConfig config);

/// Bias-corrected Adam update of params.values() from params.gradient().
/// Frozen slices are skipped. Non-finite gradients abort the step with an
/// Error listing the offending slice names; nothing is modified then.
void adam_step(OptimizerState &state, ParamVector &params);

/// Loss value at `params`; when `gradient` is non-null it receives the raw
/// gradient. Stochastic losses must draw from a stream frozen per call.
using Objective =
    std::function<double(const ParamVector &params, VectorXd *gradient)>;

struct FdReport {
  double max_relative_error = 0.0;
  Eigen::Index worst_coordinate = -1;
  std::vector<Eigen::Index> coordinates;
};

/// Central-difference check of `loss` on `probes` random coordinates, with
/// step 1e-5 * max(1, |theta|) and error |g - g_fd| / (|g_fd| + 1e-8).
FdReport fd_check(const Objective &loss, const ParamVector &params,
                  int probes, RngStream &rng);

struct Batch {
  std::vector<Eigen::Index> indices;
  /// n / |batch|, turning a batch sum into an unbiased full-data estimate.
  double scale = 1.0;
};

/// One epoch of shuffled, disjoint batches covering 0..n-1; the final
/// short batch is kept.
std::vector<Batch> minibatch_epoch(Eigen::Index n, Eigen::Index batch_size,
                                   RngStream &rng);

MatrixXd take_rows(const MatrixXd &X, const std::vector<Eigen::Index> &rows);
VectorXd take_rows(const VectorXd &y, const std::vector<Eigen::Index> &rows);

} // namespace rulgp
