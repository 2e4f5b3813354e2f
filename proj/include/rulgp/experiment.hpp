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

// Training orchestration: model construction, minibatch Adam, evaluation,
// and grid search.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rulgp/checkpoint.hpp"
#include "rulgp/metrics.hpp"
#include "rulgp/predictive.hpp"

namespace rulgp {

/// Uniform view of the five model families.
class Model {
public:
  virtual ~Model() = default;

  virtual ModelKind kind() const = 0;
  virtual ParamVector &params() = 0;
  virtual const ParamVector &params() const = 0;
  /// Negated training objective on a batch; `scale` = n / |batch|.
  virtual double loss(const MatrixXd &X, const VectorXd &y, double scale,
                      RngStream &rng, VectorXd *gradient) const = 0;
  virtual std::vector<Predictive> predict(const MatrixXd &X,
                                          RngStream &rng) const = 0;
  /// True when predictions carry no usable variance (FFNN).
  virtual bool point_only() const { return false; }
  /// Hook run once after the last epoch on the training data.
  virtual void finish_training(const MatrixXd &, const VectorXd &) {}
};

/// Fresh model for `config`, initialized from the (normalized) training
/// inputs.
std::unique_ptr<Model> make_model(const ExperimentConfig &config,
                                  const MatrixXd &X_train, RngStream &rng);
std::unique_ptr<Model> restore_model(const Checkpoint &ckpt);

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
};

/// Raised when the objective or its gradient stops being finite.
class TrainingError : public Error {
public:
  TrainingError(const std::string &what, int last_finite_epoch)
      : Error(what), last_finite_epoch_(last_finite_epoch) {}
  int last_finite_epoch() const { return last_finite_epoch_; }

private:
  int last_finite_epoch_;
};

std::vector<EpochLog> train(Model &model, const MatrixXd &X, const VectorXd &y,
                            const TrainingConfig &config, RngStream &rng,
                            std::ostream *log = nullptr);

/// Config split, or the default (first ceil(2/3) of the units train).
SplitSpec resolve_split(const ExperimentConfig &config,
                        const FleetDataset &data);

std::vector<metrics::PredictionRecord>
predict_records(const Model &model, const Checkpoint &ckpt, const Table &table,
                RngStream &rng);

struct RunResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
  std::optional<metrics::MetricsReport> validation;
  std::optional<metrics::MetricsReport> test;
  std::vector<metrics::PredictionRecord> test_records;
};

RunResult run_experiment(const ExperimentConfig &config,
                         const FleetDataset &data, std::ostream *log = nullptr);

/// Predictions of a checkpointed model for the given units of raw data,
/// with the same noise streams run_experiment uses for the test set.
std::vector<metrics::PredictionRecord>
predict_units(const Checkpoint &ckpt, const FleetDataset &data,
              const std::vector<int> &ids);

/// unit_id,t,rul_true,pred_mean,pred_variance then weight/mean/variance
/// triples per mixture component.
void write_predictions(const std::vector<metrics::PredictionRecord> &records,
                       const std::filesystem::path &path);
void write_train_log(const std::vector<EpochLog> &log,
                     const std::filesystem::path &path);

struct GridRow {
  int index = 0;
  nlohmann::json overrides;
  bool ok = false;
  std::string error;
  std::optional<metrics::MetricsReport> validation;
  std::optional<metrics::MetricsReport> test;
  /// Validation NLL (validation RMSE for ffnn); lower is better.
  double selection = 0.0;
};

struct GridResult {
  ModelKind model = ModelKind::Svgp;
  std::string selection_metric;
  std::vector<GridRow> rows; // ranked; failed runs last
};

/// Trains every Cartesian combination of `grid` on top of `base`. Every run
/// uses the base seed. When `checkpoint_dir` is set each run's checkpoint is
/// written there as run_<index>.json.
GridResult grid_search(const ExperimentConfig &base, const Grid &grid,
                       const FleetDataset &data, std::ostream *log = nullptr,
                       const std::optional<std::filesystem::path>
                           &checkpoint_dir = std::nullopt);

std::string grid_table_csv(const GridResult &result);
/// One row per model family: the selected configuration's test metrics.
std::string table1_text(const std::vector<GridResult> &results);
nlohmann::json grid_json(const GridResult &result);

} // namespace rulgp
