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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <gtest/gtest.h>

#include "rulgp/checkpoint.hpp"
#include "rulgp/experiment.hpp"
#include "rulgp/synth.hpp"

namespace rulgp {

void PrintTo(ModelKind kind, std::ostream *os) { *os << to_string(kind); }

namespace {

namespace fs = std::filesystem;

const fs::path kFixtures = RULGP_FIXTURE_DIR;

fs::path scratch_dir(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / ("rulgp_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// A fleet small enough for a full train/evaluate cycle in well under a
// second per model family.
FleetDataset tiny_fleet(std::uint64_t seed = 3) {
  SynthConfig c;
  c.units = 4;
  c.steps = 30;
  c.feature_dim = 5;
  c.seed = seed;
  return synth_fleet(c);
}

ExperimentConfig tiny_config(ModelKind kind) {
  ExperimentConfig c;
  c.model = kind;
  c.seed = 7;
  c.training.epochs = 3;
  c.training.batch_size = 32;
  c.training.learning_rate = 0.01;
  c.training.validation_fraction = 0.2;
  c.svgp.num_inducing = 8;
  c.dgp.num_inducing = 6;
  c.dgp.width = 2;
  c.dgp.train_samples = 2;
  c.dgp.test_samples = 4;
  c.dspp.num_inducing = 6;
  c.dspp.num_points = 3;
  c.mcd.hidden_layers = 2;
  c.mcd.hidden_units = 8;
  c.mcd.test_samples = 8;
  c.ffnn.hidden_layers = 2;
  c.ffnn.hidden_units = 8;
  return c;
}

TEST(Dataset, LoadsFixtureFleet) {
  const FleetDataset data = load_fleet(kFixtures / "fleet");
  EXPECT_EQ(data.unit_ids(), (std::vector<int>{1, 2}));
  EXPECT_EQ(data.feature_dim, 2);
  const Unit &u = data.unit(1);
  ASSERT_EQ(u.size(), 5);
  EXPECT_EQ(u.features(2, 1), 12.0);
  EXPECT_EQ(u.rul(0), 4.0);
  EXPECT_EQ(data.unit(2).t(2), 2.0);
  EXPECT_THROW(data.unit(9), Error);
}

TEST(Dataset, ParseErrorsNameTheRow) {
  const std::string header = "unit_id,t,f_1,rul\n";
  auto message = [](const std::string &text) {
    try {
      parse_unit_csv(text, "x.csv");
    } catch (const Error &e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message(header + "1,0,0.5,3\n1,1,abc,2\n").find("line 3"),
            std::string::npos);
  EXPECT_NE(message(header + "1,0,0.5\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("id,t,f_1,rul\n1,0,1,1\n").find("header"),
            std::string::npos);
  EXPECT_NE(message(header + "1,0,0.5,3\n2,1,0.5,2\n").find("unit_id"),
            std::string::npos);
  EXPECT_FALSE(message("").empty());
}

TEST(Dataset, ValidationRejectsIncreasingRul) {
  const Unit u = parse_unit_csv("unit_id,t,f_1,rul\n1,0,0.5,3\n1,1,0.5,4\n",
                                "x.csv");
  FleetDataset data;
  data.feature_dim = 1;
  data.units.push_back(u);
  EXPECT_THROW(data.validate(), Error);
}

TEST(Dataset, SaveLoadRoundTripIsExact) {
  const FleetDataset data = tiny_fleet();
  const fs::path dir = scratch_dir("roundtrip");
  save_fleet(data, dir);
  const FleetDataset back = load_fleet(dir);
  ASSERT_EQ(back.units.size(), data.units.size());
  for (std::size_t i = 0; i < data.units.size(); ++i) {
    EXPECT_EQ(back.units[i].features, data.units[i].features);
    EXPECT_EQ(back.units[i].rul, data.units[i].rul);
  }
  EXPECT_THROW(load_fleet(dir / "missing"), Error);
}

TEST(Dataset, NormalizationUsesTrainUnitsOnly) {
  const FleetDataset data = load_fleet(kFixtures / "fleet");
  const NormalizationStats s = compute_stats(data, {1});
  // Unit 1: f_1 = 1..5, f_2 = 10,10,12,12,14.
  EXPECT_DOUBLE_EQ(s.mean(0), 3.0);
  EXPECT_NEAR(s.std(0), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(s.mean(1), 11.6, 1e-14);
  EXPECT_NEAR(s.std(1), std::sqrt(2.24), 1e-14);
  const FleetDataset z = apply_stats(data, s);
  EXPECT_NEAR(z.unit(2).features(0, 0), (0.5 - 3.0) / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(z.unit(1).features.col(0).mean(), 0.0, 1e-15);
}

TEST(Dataset, NormalizedTrainFeaturesAreStandard) {
  SynthConfig c;
  c.units = 6;
  c.steps = 80;
  c.seed = 5;
  const FleetDataset z = normalize(synth_fleet(c), {1, 2, 3, 4});
  const MatrixXd X = stack_units(z, {1, 2, 3, 4}).X;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double mean = X.col(j).mean();
    const double var =
        (X.col(j).array() - mean).square().sum() / static_cast<double>(X.rows());
    EXPECT_LT(std::abs(mean), 1e-10);
    EXPECT_NEAR(std::sqrt(var), 1.0, 1e-6);
  }
}

TEST(Dataset, ConstantFeatureGetsFlooredStd) {
  FleetDataset data = load_fleet(kFixtures / "fleet");
  data.units[0].features.col(1).setConstant(4.0);
  const NormalizationStats s = compute_stats(data, {1});
  EXPECT_EQ(s.std(1), kStdFloor);
}

TEST(Dataset, SplitHoldsOutTailOfEachTrainUnit) {
  const FleetDataset data = load_fleet(kFixtures / "fleet");
  const SplitTables t = make_split(data, {{1}, {2}, 0.4});
  EXPECT_EQ(t.train.rows(), 3);
  EXPECT_EQ(t.validation.rows(), 2);
  EXPECT_EQ(t.validation.t, (std::vector<double>{3.0, 4.0}));
  EXPECT_EQ(t.test.rows(), 3);
  EXPECT_EQ(t.test.unit_id, (std::vector<int>{2, 2, 2}));
  EXPECT_THROW(make_split(data, {{1}, {1}, 0.1}), Error);
  EXPECT_THROW(make_split(data, {{}, {2}, 0.1}), Error);
  EXPECT_THROW(make_split(data, {{1}, {3}, 0.1}), Error);
}

TEST(Split, DefaultRuleIsFirstTwoThirds) {
  ExperimentConfig c;
  SynthConfig s;
  s.units = 9;
  s.steps = 10;
  const SplitSpec split = resolve_split(c, synth_fleet(s));
  EXPECT_EQ(split.train_ids, (std::vector<int>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(split.test_ids, (std::vector<int>{7, 8, 9}));
  const SplitSpec small = resolve_split(c, tiny_fleet());
  EXPECT_EQ(small.train_ids, (std::vector<int>{1, 2, 3}));
  c.split.test_units = {2};
  EXPECT_EQ(resolve_split(c, tiny_fleet()).train_ids,
            (std::vector<int>{1, 3, 4}));
}

TEST(Synth, DeterministicAndWellFormed) {
  SynthConfig c;
  c.units = 5;
  c.steps = 60;
  c.seed = 11;
  const FleetDataset a = synth_fleet(c);
  const FleetDataset b = synth_fleet(c);
  ASSERT_EQ(a.units.size(), 5u);
  for (std::size_t i = 0; i < a.units.size(); ++i) {
    EXPECT_EQ(a.units[i].features, b.units[i].features);
    const Unit &u = a.units[i];
    EXPECT_EQ(u.features.cols(), 8);
    for (Eigen::Index t = 0; t < u.size(); ++t) {
      EXPECT_EQ(u.rul(t), static_cast<double>(u.size() - 1 - t));
    }
  }
  c.seed = 12;
  EXPECT_NE(synth_fleet(c).units[0].features(0, 0), a.units[0].features(0, 0));
}

TEST(Synth, MeanLifetimeTracksSteps) {
  SynthConfig c;
  c.units = 40;
  c.steps = 100;
  c.lifetime_spread = 0.1;
  double total = 0.0;
  for (const auto &u : synth_fleet(c).units) {
    total += static_cast<double>(u.size());
  }
  EXPECT_NEAR(total / 40.0, 100.0, 5.0);
}

TEST(Synth, ShiftedUnitOperatingConditionsMove) {
  SynthConfig c;
  c.units = 4;
  c.steps = 80;
  c.shifted_unit = true;
  c.shift = 3.0;
  const FleetDataset data = synth_fleet(c);
  EXPECT_EQ(shifted_unit_id(c), 4);
  EXPECT_NEAR(data.unit(4).features.col(0).mean(), 3.0, 0.5);
  EXPECT_NEAR(data.unit(1).features.col(0).mean(), 0.0, 0.5);
}

double mean_distance(const MatrixXd &A, const MatrixXd &B) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
      total += (A.row(i) - B.row(j)).norm();
    }
  }
  return total / static_cast<double>(A.rows() * B.rows());
}

double energy_distance(const MatrixXd &A, const MatrixXd &B) {
  return 2.0 * mean_distance(A, B) - mean_distance(A, A) -
         mean_distance(B, B);
}

TEST(Synth, ShiftedUnitFailsPermutationTest) {
  SynthConfig c;
  c.units = 5;
  c.steps = 120;
  c.shifted_unit = true;
  c.seed = 21;
  const FleetDataset data = synth_fleet(c);
  // Operating conditions are the first three columns; take 60 rows of each.
  auto sample = [](const MatrixXd &X) {
    MatrixXd out(60, 3);
    for (Eigen::Index i = 0; i < 60; ++i) {
      out.row(i) = X.row(i * (X.rows() - 1) / 59).leftCols(3);
    }
    return out;
  };
  const MatrixXd shifted = sample(data.unit(5).features);
  const MatrixXd pooled = sample(stack_units(data, {1, 2, 3, 4}).X);
  const double observed = energy_distance(shifted, pooled);

  MatrixXd both(120, 3);
  both << shifted, pooled;
  std::vector<Eigen::Index> order(120);
  std::iota(order.begin(), order.end(), 0);
  RngStream rng(4);
  double null_max = 0.0;
  for (int draw = 0; draw < 200; ++draw) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    MatrixXd a(60, 3), b(60, 3);
    for (Eigen::Index i = 0; i < 60; ++i) {
      a.row(i) = both.row(order[i]);
      b.row(i) = both.row(order[60 + i]);
    }
    null_max = std::max(null_max, energy_distance(a, b));
  }
  EXPECT_GT(observed, null_max);

  // Two unshifted units stay within the null range.
  const MatrixXd u1 = sample(data.unit(1).features);
  const MatrixXd u2 = sample(data.unit(2).features);
  EXPECT_LT(energy_distance(u1, u2), observed / 10.0);
}

TEST(Synth, GaussianModeValidatesAndRejectsBadConfig) {
  SynthConfig c;
  c.mode = SynthMode::Gaussian;
  c.units = 3;
  c.steps = 40;
  EXPECT_NO_THROW(synth_fleet(c));
  c.feature_dim = 3;
  EXPECT_THROW(synth_fleet(c), Error);
  EXPECT_THROW(synth_mode_from_string("uniform"), Error);
}

TEST(Config, JsonRoundTripAndStrictKeys) {
  ExperimentConfig c = tiny_config(ModelKind::Mcd);
  c.split.test_units = {3, 4};
  const ExperimentConfig back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  nlohmann::json j = to_json(c);
  j["training"]["epoch"] = 3;
  EXPECT_THROW(config_from_json(j), Error);
  EXPECT_THROW(config_from_json(nlohmann::json{{"model", "rnn"}}), Error);
  EXPECT_EQ(config_from_json(nlohmann::json::object()).model, ModelKind::Dspp);
}

TEST(Config, FileRoundTrip) {
  const fs::path dir = scratch_dir("config");
  const ExperimentConfig c = tiny_config(ModelKind::Dgp);
  save_config(c, dir / "c.json");
  EXPECT_EQ(to_json(load_config(dir / "c.json")), to_json(c));
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(load_config(dir / "bad.json"), Error);
}

TEST(Config, OverridesAndValidation) {
  const ExperimentConfig c = with_override(ExperimentConfig{}, "dspp.width", 3);
  EXPECT_EQ(c.dspp.width, 3);
  EXPECT_THROW(with_override(c, "dspp.colour", 3), Error);
  EXPECT_THROW(with_override(c, "dspp.num_points", 0), Error);
  const ExperimentConfig net = with_override(c, "model", "mcd");
  EXPECT_EQ(net.model, ModelKind::Mcd);
  EXPECT_THROW(with_override(net, "mcd.keep_prob", 0.0), Error);
}

TEST(Config, DefaultGridsHaveTheDocumentedSizes) {
  auto size = [](const Grid &g) {
    std::size_t n = 1;
    for (const auto &kv : g) {
      n *= kv.second.size();
    }
    return n;
  };
  EXPECT_EQ(size(default_grid(ModelKind::Svgp)), 3u);
  EXPECT_EQ(size(default_grid(ModelKind::Dgp)), 3u);
  EXPECT_EQ(size(default_grid(ModelKind::Dspp)), 30u);
  EXPECT_EQ(size(default_grid(ModelKind::Mcd)), 288u);
  EXPECT_EQ(size(default_grid(ModelKind::Ffnn)), 24u);
  const auto keep = keep_prob_grid();
  ASSERT_EQ(keep.size(), 12u);
  EXPECT_NEAR(keep.front(), 0.01, 1e-15);
  EXPECT_LT(keep.back(), 1.0);
  EXPECT_NEAR(keep[10], 0.4642, 1e-4);
  for (std::size_t k = 1; k < keep.size(); ++k) {
    EXPECT_NEAR(keep[k] / keep[k - 1], std::pow(10.0, 1.0 / 6.0), 1e-12);
  }
}

TEST(Checkpoint, RoundTripIsBitwise) {
  RunResult run = run_experiment(tiny_config(ModelKind::Dspp), tiny_fleet());
  const std::string text = checkpoint_to_string(run.checkpoint);
  const Checkpoint back = checkpoint_from_string(text);
  EXPECT_EQ(back.params.values(), run.checkpoint.params.values());
  EXPECT_EQ(back.stats.mean, run.checkpoint.stats.mean);
  EXPECT_EQ(back.target_scale, run.checkpoint.target_scale);
  EXPECT_EQ(checkpoint_to_string(back), text);
  for (const auto &s : run.checkpoint.params.layout()) {
    EXPECT_EQ(back.params.slice(s.name).transform, s.transform);
    EXPECT_EQ(back.params.slice(s.name).trainable, s.trainable);
  }
  nlohmann::json j = nlohmann::json::parse(text);
  j["format_version"] = 99;
  EXPECT_THROW(checkpoint_from_string(j.dump()), Error);
}

class AllModels : public ::testing::TestWithParam<ModelKind> {};

TEST_P(AllModels, RunIsFiniteDeterministicAndRestorable) {
  const FleetDataset data = tiny_fleet();
  const ExperimentConfig config = tiny_config(GetParam());
  const RunResult a = run_experiment(config, data);
  const RunResult b = run_experiment(config, data);
  ASSERT_TRUE(a.test.has_value());
  ASSERT_TRUE(a.validation.has_value());
  EXPECT_EQ(a.log.size(), 3u);
  EXPECT_TRUE(std::isfinite(a.test->rmse));
  EXPECT_EQ(metrics::to_text(*a.test), metrics::to_text(*b.test));
  EXPECT_EQ(a.checkpoint.params.values(), b.checkpoint.params.values());
  if (GetParam() == ModelKind::Ffnn) {
    EXPECT_FALSE(a.test->nll.has_value());
  } else {
    ASSERT_TRUE(a.test->nll.has_value());
    EXPECT_TRUE(std::isfinite(*a.test->nll));
  }

  // A restored checkpoint reproduces the test predictions exactly.
  const Checkpoint ckpt =
      checkpoint_from_string(checkpoint_to_string(a.checkpoint));
  const auto records = predict_units(ckpt, data, ckpt.test_units);
  ASSERT_EQ(records.size(), a.test_records.size());
  EXPECT_EQ(metrics::to_text(metrics::evaluate(records, config.alpha)),
            metrics::to_text(*a.test));
}

INSTANTIATE_TEST_SUITE_P(Families, AllModels,
                         ::testing::Values(ModelKind::Svgp, ModelKind::Dgp,
                                           ModelKind::Dspp, ModelKind::Mcd,
                                           ModelKind::Ffnn),
                         [](const auto &info) { return to_string(info.param); });

TEST(Experiment, PredictionsAreInNaturalUnits) {
  const RunResult r = run_experiment(tiny_config(ModelKind::Svgp), tiny_fleet());
  double mean = 0.0;
  for (const auto &rec : r.test_records) {
    mean += metrics::point_prediction(rec) / r.test_records.size();
  }
  // Lifetimes are about 30 cycles, so predicted RUL lives on that scale.
  EXPECT_GT(mean, 3.0);
  EXPECT_LT(mean, 40.0);
  EXPECT_NE(r.checkpoint.target_scale, 1.0);
}

TEST(Experiment, FfnnBeatsConstantMeanPredictor) {
  SynthConfig s;
  s.units = 10;
  s.steps = 200;
  s.noise = 0.0;
  s.seed = 31;
  const FleetDataset data = synth_fleet(s);
  ExperimentConfig c = tiny_config(ModelKind::Ffnn);
  c.ffnn.hidden_units = 32;
  c.training.epochs = 20;
  c.training.batch_size = 128;
  const RunResult run = run_experiment(c, data);
  const SplitSpec split = resolve_split(c, data);
  const double train_mean = stack_units(data, split.train_ids).y.mean();
  double total = 0.0;
  for (const auto &r : run.test_records) {
    total += (r.rul_true - train_mean) * (r.rul_true - train_mean);
  }
  const double baseline =
      std::sqrt(total / static_cast<double>(run.test_records.size()));
  EXPECT_LT(run.test->rmse, baseline);
}

TEST(Experiment, RulCapLimitsTargetsButNotTruth) {
  ExperimentConfig c = tiny_config(ModelKind::Svgp);
  c.training.rul_cap = 10.0;
  const RunResult r = run_experiment(c, tiny_fleet());
  double max_truth = 0.0;
  for (const auto &rec : r.test_records) {
    max_truth = std::max(max_truth, rec.rul_true);
  }
  EXPECT_GT(max_truth, 10.0);
  EXPECT_LE(r.checkpoint.target_offset, 10.0);
}

TEST(Experiment, TooManyInducingPointsIsAnError) {
  ExperimentConfig c = tiny_config(ModelKind::Svgp);
  c.svgp.num_inducing = 5000;
  EXPECT_THROW(run_experiment(c, tiny_fleet()), Error);
}

// A model whose loss turns non-finite after a set number of calls.
class Diverging : public Model {
public:
  explicit Diverging(int finite_calls) : finite_calls_(finite_calls) {
    params_.add("x", MatrixXd::Ones(1, 1));
  }
  ModelKind kind() const override { return ModelKind::Svgp; }
  ParamVector &params() override { return params_; }
  const ParamVector &params() const override { return params_; }
  double loss(const MatrixXd &, const VectorXd &, double, RngStream &,
              VectorXd *g) const override {
    if (g) {
      *g = VectorXd::Ones(1);
    }
    return calls_++ < finite_calls_ ? 1.0 : std::nan("");
  }
  std::vector<Predictive> predict(const MatrixXd &, RngStream &) const override {
    return {};
  }

private:
  ParamVector params_;
  int finite_calls_;
  mutable int calls_ = 0;
};

TEST(Experiment, DivergenceReportsLastFiniteEpoch) {
  Diverging model(5); // two batches per epoch: epochs 1 and 2 finish
  TrainingConfig t;
  t.epochs = 10;
  t.batch_size = 2;
  RngStream rng(1);
  try {
    train(model, MatrixXd::Zero(4, 1), VectorXd::Zero(4), t, rng);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError &e) {
    EXPECT_EQ(e.last_finite_epoch(), 2);
  }
}

TEST(Experiment, PredictionCsvHasMixtureColumns) {
  const RunResult r = run_experiment(tiny_config(ModelKind::Dspp), tiny_fleet());
  const fs::path dir = scratch_dir("predictions");
  write_predictions(r.test_records, dir / "p.csv");
  std::ifstream in(dir / "p.csv");
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header.rfind("unit_id,t,rul_true,pred_mean,pred_variance,weight_1,"
                         "mean_1,variance_1",
                         0),
            0u);
  EXPECT_NE(header.find("variance_3"), std::string::npos);
  EXPECT_EQ(std::count(first.begin(), first.end(), ','), 4 + 3 * 3);
}

TEST(GridSearch, RanksRunsAndRecordsFailures) {
  const FleetDataset data = tiny_fleet();
  const ExperimentConfig base = tiny_config(ModelKind::Svgp);
  const Grid grid = {{"svgp.num_inducing", {4, 100000, 8}},
                     {"svgp.objective", {"elbo", "ppgpr"}}};
  const fs::path dir = scratch_dir("grid");
  const GridResult r = grid_search(base, grid, data, nullptr, dir);
  ASSERT_EQ(r.rows.size(), 6u);
  EXPECT_EQ(r.selection_metric, "validation_nll");
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_TRUE(r.rows[i].ok);
    if (i > 0) {
      EXPECT_LE(r.rows[i - 1].selection, r.rows[i].selection);
    }
  }
  EXPECT_FALSE(r.rows[4].ok);
  EXPECT_FALSE(r.rows[5].ok);
  EXPECT_EQ(r.rows[4].index, 2);
  EXPECT_FALSE(r.rows[4].error.empty());

  // Same base seed for every run: the grid row equals a standalone run.
  const GridRow &best = r.rows.front();
  ExperimentConfig c = base;
  for (const auto &[k, v] : best.overrides.items()) {
    c = with_override(c, k, v);
  }
  EXPECT_EQ(metrics::to_text(*run_experiment(c, data).test),
            metrics::to_text(*best.test));
  EXPECT_TRUE(fs::exists(dir / ("run_" + std::to_string(best.index) + ".json")));

  const std::string csv = grid_table_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  const std::string table = table1_text({r});
  EXPECT_NE(table.find("svgp"), std::string::npos);
  EXPECT_EQ(grid_json(r)["rows"].size(), 6u);
}

TEST(GridSearch, FfnnSelectsOnRmse) {
  const GridResult r =
      grid_search(tiny_config(ModelKind::Ffnn),
                  {{"ffnn.hidden_units", {4, 6}}}, tiny_fleet());
  EXPECT_EQ(r.selection_metric, "validation_rmse");
  EXPECT_EQ(r.rows.front().selection, r.rows.front().validation->rmse);
}

} // namespace
} // namespace rulgp
