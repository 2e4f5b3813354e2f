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

#include "rulgp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "rulgp/dgp.hpp"
#include "rulgp/dspp.hpp"
#include "rulgp/mcd.hpp"
#include "rulgp/svgp.hpp"

namespace rulgp {

using metrics::PredictionRecord;
using nlohmann::json;

namespace {

// Substream indices derived from the experiment seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kValidationStream = 2;
constexpr std::uint64_t kTestStream = 3;

double initial_lengthscale(double configured, Eigen::Index dim) {
  return configured > 0.0 ? configured : std::sqrt(static_cast<double>(dim));
}

void freeze_inducing(ParamVector &params) {
  const std::string suffix = "inducing_points";
  for (const ParamSlice &s : params.layout()) {
    if (s.name.size() >= suffix.size() &&
        s.name.compare(s.name.size() - suffix.size(), suffix.size(),
                       suffix) == 0) {
      params.set_trainable(s.name, false);
    }
  }
}

std::vector<Predictive> from_mixtures(std::vector<MixturePredictive> mixes) {
  std::vector<Predictive> out;
  out.reserve(mixes.size());
  for (auto &m : mixes) {
    out.emplace_back(std::move(m));
  }
  return out;
}

class SvgpAdapter : public Model {
public:
  SvgpAdapter(svgp::SVGPModel model, svgp::ObjectiveSpec spec)
      : model_(std::move(model)), spec_(spec) {}

  ModelKind kind() const override { return ModelKind::Svgp; }
  ParamVector &params() override { return model_.params(); }
  const ParamVector &params() const override { return model_.params(); }
  double loss(const MatrixXd &X, const VectorXd &y, double scale, RngStream &,
              VectorXd *gradient) const override {
    return model_.loss(X, y, scale, spec_, gradient);
  }
  std::vector<Predictive> predict(const MatrixXd &X,
                                  RngStream &) const override {
    std::vector<Predictive> out;
    for (const auto &g : model_.predict(X)) {
      out.emplace_back(g);
    }
    return out;
  }

private:
  svgp::SVGPModel model_;
  svgp::ObjectiveSpec spec_;
};

class DgpAdapter : public Model {
public:
  DgpAdapter(dgp::DeepGPModel model, svgp::ObjectiveSpec spec)
      : model_(std::move(model)), spec_(spec) {}

  ModelKind kind() const override { return ModelKind::Dgp; }
  ParamVector &params() override { return model_.params(); }
  const ParamVector &params() const override { return model_.params(); }
  double loss(const MatrixXd &X, const VectorXd &y, double scale,
              RngStream &rng, VectorXd *gradient) const override {
    return model_.loss(X, y, scale, spec_, rng, gradient);
  }
  std::vector<Predictive> predict(const MatrixXd &X,
                                  RngStream &rng) const override {
    return from_mixtures(model_.predict(X, rng));
  }

private:
  dgp::DeepGPModel model_;
  svgp::ObjectiveSpec spec_;
};

class DsppAdapter : public Model {
public:
  explicit DsppAdapter(dspp::DSPPModel model) : model_(std::move(model)) {}

  ModelKind kind() const override { return ModelKind::Dspp; }
  ParamVector &params() override { return model_.params(); }
  const ParamVector &params() const override { return model_.params(); }
  double loss(const MatrixXd &X, const VectorXd &y, double scale, RngStream &,
              VectorXd *gradient) const override {
    return model_.loss(X, y, scale, gradient);
  }
  std::vector<Predictive> predict(const MatrixXd &X,
                                  RngStream &) const override {
    return from_mixtures(model_.predict(X));
  }

private:
  dspp::DSPPModel model_;
};

class NetAdapter : public Model {
public:
  NetAdapter(ModelKind kind, mcd::MLP net, const NetConfig &config)
      : kind_(kind), net_(std::move(net)), config_(config) {}

  ModelKind kind() const override { return kind_; }
  ParamVector &params() override { return net_.params(); }
  const ParamVector &params() const override { return net_.params(); }
  double loss(const MatrixXd &X, const VectorXd &y, double, RngStream &rng,
              VectorXd *gradient) const override {
    return net_.loss(X, y, config_.weight_decay, rng, gradient);
  }
  std::vector<Predictive> predict(const MatrixXd &X,
                                  RngStream &rng) const override {
    std::vector<Predictive> out;
    if (kind_ == ModelKind::Ffnn) {
      const VectorXd mean = net_.ffnn_predict(X);
      for (Eigen::Index i = 0; i < mean.size(); ++i) {
        out.emplace_back(GaussianDist{mean(i), 1.0});
      }
      return out;
    }
    for (const auto &p : net_.mc_predict(X, config_.test_samples, rng)) {
      out.emplace_back(GaussianDist{p.mean, std::max(p.variance, 1e-12)});
    }
    return out;
  }
  bool point_only() const override { return kind_ == ModelKind::Ffnn; }

  // A homoscedastic net takes tau^{-1} from its training residuals.
  void finish_training(const MatrixXd &X, const VectorXd &y) override {
    if (net_.config().heteroscedastic) {
      return;
    }
    const VectorXd r = net_.ffnn_predict(X) - y;
    net_.set_noise_variance(
        std::max(r.squaredNorm() / static_cast<double>(r.size()),
                 mcd::kNoiseFloor));
  }

private:
  ModelKind kind_;
  mcd::MLP net_;
  NetConfig config_;
};

dgp::Architecture dgp_arch(const DgpConfig &c, Eigen::Index d) {
  return {d, c.depth, c.width, c.skip_connection};
}

dgp::Architecture dspp_arch(const DsppConfig &c, Eigen::Index d) {
  return {d, c.depth, c.width, c.skip_connection};
}

mcd::MLPConfig net_config(const NetConfig &c, Eigen::Index d, bool ffnn) {
  return {d, c.hidden_layers, c.hidden_units, c.keep_prob,
          ffnn ? false : c.heteroscedastic};
}

} // namespace

std::unique_ptr<Model> make_model(const ExperimentConfig &config,
                                  const MatrixXd &X_train, RngStream &rng) {
  config.validate();
  const Eigen::Index d = X_train.cols();
  std::unique_ptr<Model> model;
  auto centers = [&](const GPConfig &gp) {
    return svgp::init_inducing(X_train, gp.num_inducing, gp.inducing_init,
                               rng);
  };
  switch (config.model) {
  case ModelKind::Svgp: {
    const auto &c = config.svgp;
    svgp::VariationalGPLayer layer = svgp::initial_layer(
        centers(c), initial_lengthscale(c.lengthscale, d), c.kernel_variance,
        1.0);
    model = std::make_unique<SvgpAdapter>(
        svgp::SVGPModel(layer, {c.obs_variance}),
        svgp::ObjectiveSpec{c.objective, c.beta_reg});
    break;
  }
  case ModelKind::Dgp: {
    const auto &c = config.dgp;
    dgp::StackInit init{c.lengthscale, c.kernel_variance, c.hidden_cov_scale,
                        1.0};
    model = std::make_unique<DgpAdapter>(
        dgp::DeepGPModel::initialize(dgp_arch(c, d), centers(c), init,
                                     c.obs_variance, c.train_samples,
                                     c.test_samples, rng),
        svgp::ObjectiveSpec{c.objective, c.beta_reg});
    break;
  }
  case ModelKind::Dspp: {
    const auto &c = config.dspp;
    dgp::StackInit init{c.lengthscale, c.kernel_variance, c.hidden_cov_scale,
                        1.0};
    model = std::make_unique<DsppAdapter>(dspp::DSPPModel::initialize(
        dspp_arch(c, d), centers(c), init, c.obs_variance, c.num_points,
        c.beta_reg, rng));
    break;
  }
  case ModelKind::Mcd:
    model = std::make_unique<NetAdapter>(
        ModelKind::Mcd,
        mcd::MLP::initialize(net_config(config.mcd, d, false), rng),
        config.mcd);
    break;
  case ModelKind::Ffnn:
    model = std::make_unique<NetAdapter>(
        ModelKind::Ffnn,
        mcd::MLP::initialize(net_config(config.ffnn, d, true), rng),
        config.ffnn);
    break;
  }
  const bool gp = config.model == ModelKind::Svgp ||
                  config.model == ModelKind::Dgp ||
                  config.model == ModelKind::Dspp;
  if (gp) {
    const GPConfig &c = config.model == ModelKind::Svgp
                            ? static_cast<const GPConfig &>(config.svgp)
                        : config.model == ModelKind::Dgp
                            ? static_cast<const GPConfig &>(config.dgp)
                            : static_cast<const GPConfig &>(config.dspp);
    if (!c.train_inducing) {
      freeze_inducing(model->params());
    }
  }
  return model;
}

std::unique_ptr<Model> restore_model(const Checkpoint &ckpt) {
  const ExperimentConfig &config = ckpt.config;
  const Eigen::Index d = ckpt.input_dim;
  switch (config.model) {
  case ModelKind::Svgp:
    return std::make_unique<SvgpAdapter>(
        svgp::SVGPModel(ckpt.params),
        svgp::ObjectiveSpec{config.svgp.objective, config.svgp.beta_reg});
  case ModelKind::Dgp:
    return std::make_unique<DgpAdapter>(
        dgp::DeepGPModel(dgp_arch(config.dgp, d), ckpt.params,
                         config.dgp.train_samples, config.dgp.test_samples),
        svgp::ObjectiveSpec{config.dgp.objective, config.dgp.beta_reg});
  case ModelKind::Dspp:
    return std::make_unique<DsppAdapter>(dspp::DSPPModel(
        dspp_arch(config.dspp, d), ckpt.params, config.dspp.beta_reg));
  case ModelKind::Mcd:
    return std::make_unique<NetAdapter>(
        ModelKind::Mcd,
        mcd::MLP(net_config(config.mcd, d, false), ckpt.params), config.mcd);
  case ModelKind::Ffnn:
    return std::make_unique<NetAdapter>(
        ModelKind::Ffnn,
        mcd::MLP(net_config(config.ffnn, d, true), ckpt.params), config.ffnn);
  }
  throw Error("restore_model: unknown model kind");
}

std::vector<EpochLog> train(Model &model, const MatrixXd &X, const VectorXd &y,
                            const TrainingConfig &config, RngStream &rng,
                            std::ostream *log) {
  const Eigen::Index n = X.rows();
  if (n == 0) {
    throw Error("train: no training rows");
  }
  ParamVector &params = model.params();
  OptimizerState opt = make_optimizer(params, {config.learning_rate});
  std::vector<EpochLog> history;
  VectorXd gradient;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double total = 0.0;
    std::size_t batches = 0;
    try {
      for (const Batch &b : minibatch_epoch(n, config.batch_size, rng)) {
        const MatrixXd Xb = take_rows(X, b.indices);
        const VectorXd yb = take_rows(y, b.indices);
        const double value = model.loss(Xb, yb, b.scale, rng, &gradient);
        if (!std::isfinite(value)) {
          throw NumericalError("objective is not finite");
        }
        params.gradient() = gradient;
        adam_step(opt, params);
        total += value;
        ++batches;
      }
    } catch (const Error &e) {
      throw TrainingError("training diverged in epoch " +
                              std::to_string(epoch) + ": " + e.what(),
                          epoch - 1);
    }
    EpochLog entry{epoch, total / static_cast<double>(batches)};
    history.push_back(entry);
    if (log != nullptr) {
      *log << "epoch " << epoch << '/' << config.epochs
           << " loss=" << metrics::format_double(entry.mean_loss) << '\n';
    }
  }
  model.finish_training(X, y);
  return history;
}

SplitSpec resolve_split(const ExperimentConfig &config,
                        const FleetDataset &data) {
  SplitSpec split;
  split.validation_fraction = config.training.validation_fraction;
  split.train_ids = config.split.train_units;
  split.test_ids = config.split.test_units;
  if (split.train_ids.empty() && split.test_ids.empty()) {
    const std::vector<int> ids = data.unit_ids();
    const std::size_t n_train = (2 * ids.size() + 2) / 3;
    split.train_ids.assign(ids.begin(),
                           ids.begin() + static_cast<long>(n_train));
    split.test_ids.assign(ids.begin() + static_cast<long>(n_train), ids.end());
  } else if (split.train_ids.empty()) {
    for (int id : data.unit_ids()) {
      if (std::find(split.test_ids.begin(), split.test_ids.end(), id) ==
          split.test_ids.end()) {
        split.train_ids.push_back(id);
      }
    }
  }
  split.validate(data);
  return split;
}

std::vector<PredictionRecord> predict_records(const Model &model,
                                              const Checkpoint &ckpt,
                                              const Table &table,
                                              RngStream &rng) {
  std::vector<PredictionRecord> out;
  if (table.rows() == 0) {
    return out;
  }
  const auto preds = model.predict(table.X, rng);
  out.reserve(preds.size());
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    PredictionRecord r;
    r.unit_id = table.unit_id[static_cast<std::size_t>(i)];
    r.t = table.t[static_cast<std::size_t>(i)];
    r.rul_true = table.y(i);
    r.predictive = rescale(preds[static_cast<std::size_t>(i)],
                           ckpt.target_offset, ckpt.target_scale);
    r.point_only = model.point_only();
    out.push_back(std::move(r));
  }
  return out;
}

RunResult run_experiment(const ExperimentConfig &config,
                         const FleetDataset &data, std::ostream *log) {
  config.validate();
  const SplitSpec split = resolve_split(config, data);
  const NormalizationStats stats = compute_stats(data, split.train_ids);
  const FleetDataset normalized = apply_stats(data, stats);
  const SplitTables tables = make_split(normalized, split);

  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.input_dim = data.feature_dim;
  ckpt.stats = stats;
  ckpt.train_units = split.train_ids;
  ckpt.test_units = split.test_ids;

  VectorXd y = tables.train.y;
  if (config.training.rul_cap > 0.0) {
    y = y.cwiseMin(config.training.rul_cap);
  }
  if (config.training.standardize_targets) {
    ckpt.target_offset = y.mean();
    const double var =
        (y.array() - ckpt.target_offset).square().sum() /
        static_cast<double>(y.size());
    ckpt.target_scale = std::max(std::sqrt(var), kStdFloor);
  }
  const VectorXd y_model =
      (y.array() - ckpt.target_offset) / ckpt.target_scale;

  RngStream init_rng(mix_seed(config.seed, kInitStream));
  RngStream train_rng(mix_seed(config.seed, kTrainStream));
  std::unique_ptr<Model> model = make_model(config, tables.train.X, init_rng);

  RunResult result;
  result.log =
      train(*model, tables.train.X, y_model, config.training, train_rng, log);
  ckpt.params = model->params();

  if (tables.validation.rows() > 0) {
    RngStream rng(mix_seed(config.seed, kValidationStream));
    result.validation = metrics::evaluate(
        predict_records(*model, ckpt, tables.validation, rng), config.alpha);
  }
  if (tables.test.rows() > 0) {
    RngStream rng(mix_seed(config.seed, kTestStream));
    result.test_records = predict_records(*model, ckpt, tables.test, rng);
    result.test = metrics::evaluate(result.test_records, config.alpha);
  }
  result.checkpoint = std::move(ckpt);
  return result;
}

std::vector<PredictionRecord> predict_units(const Checkpoint &ckpt,
                                            const FleetDataset &data,
                                            const std::vector<int> &ids) {
  if (data.feature_dim != ckpt.input_dim) {
    throw DimensionError("data has " + std::to_string(data.feature_dim) +
                         " features, checkpoint expects " +
                         std::to_string(ckpt.input_dim));
  }
  const FleetDataset normalized = apply_stats(data, ckpt.stats);
  const Table table = stack_units(normalized, ids);
  const std::unique_ptr<Model> model = restore_model(ckpt);
  RngStream rng(mix_seed(ckpt.config.seed, kTestStream));
  return predict_records(*model, ckpt, table, rng);
}

void write_predictions(const std::vector<PredictionRecord> &records,
                       const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  std::size_t components = 0;
  for (const auto &r : records) {
    if (const auto *m = std::get_if<MixturePredictive>(&r.predictive)) {
      components = std::max(components, m->components.size());
    }
  }
  out << "unit_id,t,rul_true,pred_mean,pred_variance";
  for (std::size_t k = 1; k <= components; ++k) {
    out << ",weight_" << k << ",mean_" << k << ",variance_" << k;
  }
  out << '\n';
  using metrics::format_double;
  for (const auto &r : records) {
    const GaussianDist g = predictive_moments(r.predictive);
    out << r.unit_id << ',' << format_double(r.t) << ','
        << format_double(r.rul_true) << ',' << format_double(g.mean) << ','
        << (r.point_only ? std::string("NA") : format_double(g.variance));
    std::size_t written = 0;
    if (const auto *m = std::get_if<MixturePredictive>(&r.predictive)) {
      for (const auto &c : m->components) {
        out << ',' << format_double(c.weight) << ','
            << format_double(c.dist.mean) << ','
            << format_double(c.dist.variance);
      }
      written = m->components.size();
    }
    for (; written < components; ++written) {
      out << ",,,";
    }
    out << '\n';
  }
}

void write_train_log(const std::vector<EpochLog> &log,
                     const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out << "epoch,mean_loss\n";
  for (const auto &e : log) {
    out << e.epoch << ',' << metrics::format_double(e.mean_loss) << '\n';
  }
}

namespace {

// Cartesian product with the last key varying fastest.
std::vector<json> combinations(const Grid &grid) {
  std::vector<json> out{json::object()};
  for (const auto &[key, values] : grid) {
    if (values.empty()) {
      throw Error("grid: key '" + key + "' has no values");
    }
    std::vector<json> next;
    for (const json &partial : out) {
      for (const json &v : values) {
        json j = partial;
        j[key] = v;
        next.push_back(std::move(j));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::string opt(const std::optional<double> &v) {
  return v ? metrics::format_double(*v) : "NA";
}

} // namespace

GridResult grid_search(const ExperimentConfig &base, const Grid &grid,
                       const FleetDataset &data, std::ostream *log,
                       const std::optional<std::filesystem::path>
                           &checkpoint_dir) {
  if (grid.empty()) {
    throw Error("grid search: empty grid");
  }
  GridResult result;
  result.model = base.model;
  const bool by_rmse = base.model == ModelKind::Ffnn;
  result.selection_metric = by_rmse ? "validation_rmse" : "validation_nll";
  const std::vector<json> combos = combinations(grid);
  for (std::size_t i = 0; i < combos.size(); ++i) {
    GridRow row;
    row.index = static_cast<int>(i);
    row.overrides = combos[i];
    if (log != nullptr) {
      *log << "run " << i + 1 << '/' << combos.size() << ' '
           << combos[i].dump() << '\n';
    }
    try {
      ExperimentConfig config = base;
      for (const auto &[key, value] : combos[i].items()) {
        config = with_override(config, key, value);
      }
      RunResult run = run_experiment(config, data, nullptr);
      if (!run.validation) {
        throw Error("grid search needs a nonempty validation split");
      }
      row.validation = run.validation;
      row.test = run.test;
      const auto &metric =
          by_rmse ? std::optional<double>(run.validation->rmse)
                  : run.validation->nll;
      if (!metric || !std::isfinite(*metric)) {
        throw Error("selection metric is not available");
      }
      row.selection = *metric;
      row.ok = true;
      if (checkpoint_dir) {
        std::filesystem::create_directories(*checkpoint_dir);
        save_checkpoint(run.checkpoint,
                        *checkpoint_dir /
                            ("run_" + std::to_string(i) + ".json"));
      }
    } catch (const Error &e) {
      row.ok = false;
      row.error = e.what();
      if (log != nullptr) {
        *log << "  failed: " << e.what() << '\n';
      }
    }
    result.rows.push_back(std::move(row));
  }
  std::stable_sort(result.rows.begin(), result.rows.end(),
                   [](const GridRow &a, const GridRow &b) {
                     if (a.ok != b.ok) {
                       return a.ok;
                     }
                     if (!a.ok) {
                       return a.index < b.index;
                     }
                     return a.selection < b.selection;
                   });
  return result;
}

std::string grid_table_csv(const GridResult &result) {
  std::ostringstream os;
  os << "rank,index,overrides,status," << result.selection_metric
     << ",val_rmse,val_nll,test_rmse,test_nll,test_alpha_lambda,"
        "test_prob_alpha_lambda,error\n";
  int rank = 0;
  for (const auto &row : result.rows) {
    ++rank;
    std::string overrides = row.overrides.dump();
    std::replace(overrides.begin(), overrides.end(), ',', ';');
    std::string error = row.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    os << rank << ',' << row.index << ',' << overrides << ','
       << (row.ok ? "ok" : "failed") << ','
       << (row.ok ? metrics::format_double(row.selection) : "NA") << ','
       << (row.validation ? metrics::format_double(row.validation->rmse)
                          : "NA")
       << ',' << (row.validation ? opt(row.validation->nll) : "NA") << ','
       << (row.test ? metrics::format_double(row.test->rmse) : "NA") << ','
       << (row.test ? opt(row.test->nll) : "NA") << ','
       << (row.test ? opt(row.test->alpha_lambda) : "NA") << ','
       << (row.test ? opt(row.test->prob_alpha_lambda) : "NA") << ','
       << error << '\n';
  }
  return os.str();
}

std::string table1_text(const std::vector<GridResult> &results) {
  std::ostringstream os;
  os << "# Test-set metrics of the configuration selected on validation data.\n"
     << "# NLL is the per-sample mean; alpha-lambda metrics skip rows with "
        "zero RUL.\n";
  os << std::left << std::setw(8) << "Model" << std::setw(17) << "NLL"
     << std::setw(17) << "RMSE" << std::setw(17) << "alpha-lambda"
     << std::setw(17) << "P(alpha-lambda)"
     << "  selected\n";
  auto cell = [](const std::optional<double> &v) {
    if (!v) {
      return std::string("-");
    }
    std::ostringstream c;
    c << std::fixed << std::setprecision(4) << *v;
    return c.str();
  };
  for (const auto &r : results) {
    os << std::left << std::setw(8) << to_string(r.model);
    const GridRow *best =
        !r.rows.empty() && r.rows.front().ok ? &r.rows.front() : nullptr;
    if (best == nullptr || !best->test) {
      os << std::setw(17) << "-" << std::setw(17) << "-" << std::setw(17)
         << "-" << std::setw(17) << "-" << "  "
         << (best ? best->overrides.dump() : "no successful run") << '\n';
      continue;
    }
    const auto &t = *best->test;
    os << std::setw(17) << cell(t.nll) << std::setw(17) << cell(t.rmse)
       << std::setw(17) << cell(t.alpha_lambda) << std::setw(17)
       << cell(t.prob_alpha_lambda) << "  " << best->overrides.dump() << '\n';
  }
  return os.str();
}

json grid_json(const GridResult &result) {
  json j;
  j["model"] = to_string(result.model);
  j["selection_metric"] = result.selection_metric;
  j["rows"] = json::array();
  for (const auto &row : result.rows) {
    json r{{"index", row.index},
           {"overrides", row.overrides},
           {"status", row.ok ? "ok" : "failed"}};
    if (row.ok) {
      r["selection"] = row.selection;
    }
    if (!row.error.empty()) {
      r["error"] = row.error;
    }
    if (row.validation) {
      r["validation"] = json::parse(metrics::to_json(*row.validation));
    }
    if (row.test) {
      r["test"] = json::parse(metrics::to_json(*row.test));
    }
    j["rows"].push_back(std::move(r));
  }
  return j;
}

} // namespace rulgp
