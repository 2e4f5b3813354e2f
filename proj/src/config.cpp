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

#include "rulgp/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace rulgp {

using nlohmann::json;

std::string to_string(ModelKind kind) {
  switch (kind) {
  case ModelKind::Svgp:
    return "svgp";
  case ModelKind::Dgp:
    return "dgp";
  case ModelKind::Dspp:
    return "dspp";
  case ModelKind::Mcd:
    return "mcd";
  case ModelKind::Ffnn:
    return "ffnn";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string &name) {
  for (ModelKind k : {ModelKind::Svgp, ModelKind::Dgp, ModelKind::Dspp,
                      ModelKind::Mcd, ModelKind::Ffnn}) {
    if (to_string(k) == name) {
      return k;
    }
  }
  throw Error("unknown model kind '" + name +
              "' (expected svgp, dgp, dspp, mcd or ffnn)");
}

namespace {

void require(bool ok, const std::string &what) {
  if (!ok) {
    throw Error("config: " + what);
  }
}

void validate_gp(const GPConfig &gp, const std::string &name) {
  require(gp.num_inducing >= 1, name + ".num_inducing must be positive");
  require(gp.kernel_variance > 0.0, name + ".kernel_variance must be positive");
  require(gp.obs_variance > 0.0, name + ".obs_variance must be positive");
  require(gp.beta_reg >= 0.0, name + ".beta_reg must be nonnegative");
}

void validate_net(const NetConfig &net, const std::string &name) {
  require(net.hidden_layers >= 1, name + ".hidden_layers must be positive");
  require(net.hidden_units >= 1, name + ".hidden_units must be positive");
  require(net.keep_prob > 0.0 && net.keep_prob <= 1.0,
          name + ".keep_prob must lie in (0, 1]");
  require(net.weight_decay >= 0.0, name + ".weight_decay must be nonnegative");
  require(net.test_samples >= 1, name + ".test_samples must be positive");
}

} // namespace

void ExperimentConfig::validate() const {
  require(alpha > 0.0, "alpha must be positive");
  require(training.batch_size >= 1, "training.batch_size must be positive");
  require(training.learning_rate > 0.0,
          "training.learning_rate must be positive");
  require(training.epochs >= 0, "training.epochs must be nonnegative");
  require(training.validation_fraction >= 0.0 &&
              training.validation_fraction < 1.0,
          "training.validation_fraction must lie in [0, 1)");
  require(training.rul_cap >= 0.0, "training.rul_cap must be nonnegative");
  switch (model) {
  case ModelKind::Svgp:
    validate_gp(svgp, "svgp");
    break;
  case ModelKind::Dgp:
    validate_gp(dgp, "dgp");
    require(dgp.depth >= 0 && dgp.depth <= 3, "dgp.depth must lie in [0, 3]");
    require(dgp.width >= 1, "dgp.width must be positive");
    require(dgp.train_samples >= 1 && dgp.test_samples >= 1,
            "dgp sample counts must be positive");
    break;
  case ModelKind::Dspp:
    validate_gp(dspp, "dspp");
    require(dspp.depth >= 0 && dspp.depth <= 3,
            "dspp.depth must lie in [0, 3]");
    require(dspp.width >= 1, "dspp.width must be positive");
    require(dspp.num_points >= 1 && dspp.num_points <= 50,
            "dspp.num_points must lie in [1, 50]");
    break;
  case ModelKind::Mcd:
    validate_net(mcd, "mcd");
    break;
  case ModelKind::Ffnn:
    validate_net(ffnn, "ffnn");
    require(!ffnn.heteroscedastic, "ffnn has no variance head");
    break;
  }
}

namespace {

json gp_json(const GPConfig &gp) {
  return {{"num_inducing", gp.num_inducing},
          {"inducing_init", svgp::to_string(gp.inducing_init)},
          {"train_inducing", gp.train_inducing},
          {"lengthscale", gp.lengthscale},
          {"kernel_variance", gp.kernel_variance},
          {"obs_variance", gp.obs_variance},
          {"beta_reg", gp.beta_reg}};
}

json net_json(const NetConfig &n) {
  return {{"hidden_layers", n.hidden_layers},
          {"hidden_units", n.hidden_units},
          {"keep_prob", n.keep_prob},
          {"weight_decay", n.weight_decay},
          {"heteroscedastic", n.heteroscedastic},
          {"test_samples", n.test_samples}};
}

// Copies j[key] into `out` when present.
template <class T>
void read(const json &j, const char *key, T &out) {
  if (j.contains(key)) {
    out = j.at(key).get<T>();
  }
}

void check_keys(const json &j, const std::string &section,
                const std::set<std::string> &allowed) {
  if (!j.is_object()) {
    throw Error("config: " + section + " must be an object");
  }
  for (const auto &[key, value] : j.items()) {
    if (allowed.count(key) == 0) {
      throw Error("config: unknown key '" +
                  (section.empty() ? key : section + "." + key) + "'");
    }
  }
}

void read_gp(const json &j, GPConfig &gp) {
  read(j, "num_inducing", gp.num_inducing);
  if (j.contains("inducing_init")) {
    gp.inducing_init =
        svgp::inducing_init_from_string(j.at("inducing_init").get<std::string>());
  }
  read(j, "train_inducing", gp.train_inducing);
  read(j, "lengthscale", gp.lengthscale);
  read(j, "kernel_variance", gp.kernel_variance);
  read(j, "obs_variance", gp.obs_variance);
  read(j, "beta_reg", gp.beta_reg);
}

const std::set<std::string> kGPKeys = {
    "num_inducing", "inducing_init", "train_inducing", "lengthscale",
    "kernel_variance", "obs_variance", "beta_reg"};

std::set<std::string> with(std::set<std::string> base,
                           std::initializer_list<const char *> extra) {
  for (const char *e : extra) {
    base.insert(e);
  }
  return base;
}

void read_net(const json &j, const std::string &name, NetConfig &n) {
  check_keys(j, name,
             {"hidden_layers", "hidden_units", "keep_prob", "weight_decay",
              "heteroscedastic", "test_samples"});
  read(j, "hidden_layers", n.hidden_layers);
  read(j, "hidden_units", n.hidden_units);
  read(j, "keep_prob", n.keep_prob);
  read(j, "weight_decay", n.weight_decay);
  read(j, "heteroscedastic", n.heteroscedastic);
  read(j, "test_samples", n.test_samples);
}

} // namespace

json to_json(const ExperimentConfig &c) {
  json j;
  j["model"] = to_string(c.model);
  j["seed"] = c.seed;
  j["alpha"] = c.alpha;
  j["training"] = {{"batch_size", c.training.batch_size},
                   {"learning_rate", c.training.learning_rate},
                   {"epochs", c.training.epochs},
                   {"validation_fraction", c.training.validation_fraction},
                   {"standardize_targets", c.training.standardize_targets},
                   {"rul_cap", c.training.rul_cap}};
  j["split"] = {{"train_units", c.split.train_units},
                {"test_units", c.split.test_units}};
  j["svgp"] = gp_json(c.svgp);
  j["svgp"]["objective"] = svgp::to_string(c.svgp.objective);
  j["dgp"] = gp_json(c.dgp);
  j["dgp"]["objective"] = svgp::to_string(c.dgp.objective);
  j["dgp"]["depth"] = c.dgp.depth;
  j["dgp"]["width"] = c.dgp.width;
  j["dgp"]["skip_connection"] = c.dgp.skip_connection;
  j["dgp"]["train_samples"] = c.dgp.train_samples;
  j["dgp"]["test_samples"] = c.dgp.test_samples;
  j["dgp"]["hidden_cov_scale"] = c.dgp.hidden_cov_scale;
  j["dspp"] = gp_json(c.dspp);
  j["dspp"]["depth"] = c.dspp.depth;
  j["dspp"]["width"] = c.dspp.width;
  j["dspp"]["skip_connection"] = c.dspp.skip_connection;
  j["dspp"]["num_points"] = c.dspp.num_points;
  j["dspp"]["hidden_cov_scale"] = c.dspp.hidden_cov_scale;
  j["mcd"] = net_json(c.mcd);
  j["ffnn"] = net_json(c.ffnn);
  return j;
}

ExperimentConfig config_from_json(const json &j) {
  check_keys(j, "",
             {"model", "seed", "alpha", "training", "split", "svgp", "dgp",
              "dspp", "mcd", "ffnn"});
  ExperimentConfig c;
  try {
    if (j.contains("model")) {
      c.model = model_kind_from_string(j.at("model").get<std::string>());
    }
    read(j, "seed", c.seed);
    read(j, "alpha", c.alpha);
    if (j.contains("training")) {
      const json &t = j.at("training");
      check_keys(t, "training",
                 {"batch_size", "learning_rate", "epochs",
                  "validation_fraction", "standardize_targets", "rul_cap"});
      read(t, "batch_size", c.training.batch_size);
      read(t, "learning_rate", c.training.learning_rate);
      read(t, "epochs", c.training.epochs);
      read(t, "validation_fraction", c.training.validation_fraction);
      read(t, "standardize_targets", c.training.standardize_targets);
      read(t, "rul_cap", c.training.rul_cap);
    }
    if (j.contains("split")) {
      const json &s = j.at("split");
      check_keys(s, "split", {"train_units", "test_units"});
      read(s, "train_units", c.split.train_units);
      read(s, "test_units", c.split.test_units);
    }
    if (j.contains("svgp")) {
      const json &s = j.at("svgp");
      check_keys(s, "svgp", with(kGPKeys, {"objective"}));
      read_gp(s, c.svgp);
      if (s.contains("objective")) {
        c.svgp.objective =
            svgp::objective_kind_from_string(s.at("objective").get<std::string>());
      }
    }
    if (j.contains("dgp")) {
      const json &s = j.at("dgp");
      check_keys(s, "dgp",
                 with(kGPKeys, {"objective", "depth", "width",
                                "skip_connection", "train_samples",
                                "test_samples", "hidden_cov_scale"}));
      read_gp(s, c.dgp);
      if (s.contains("objective")) {
        c.dgp.objective =
            svgp::objective_kind_from_string(s.at("objective").get<std::string>());
      }
      read(s, "depth", c.dgp.depth);
      read(s, "width", c.dgp.width);
      read(s, "skip_connection", c.dgp.skip_connection);
      read(s, "train_samples", c.dgp.train_samples);
      read(s, "test_samples", c.dgp.test_samples);
      read(s, "hidden_cov_scale", c.dgp.hidden_cov_scale);
    }
    if (j.contains("dspp")) {
      const json &s = j.at("dspp");
      check_keys(s, "dspp",
                 with(kGPKeys, {"depth", "width", "skip_connection",
                                "num_points", "hidden_cov_scale"}));
      read_gp(s, c.dspp);
      read(s, "depth", c.dspp.depth);
      read(s, "width", c.dspp.width);
      read(s, "skip_connection", c.dspp.skip_connection);
      read(s, "num_points", c.dspp.num_points);
      read(s, "hidden_cov_scale", c.dspp.hidden_cov_scale);
    }
    if (j.contains("mcd")) {
      read_net(j.at("mcd"), "mcd", c.mcd);
    }
    if (j.contains("ffnn")) {
      read_net(j.at("ffnn"), "ffnn", c.ffnn);
    }
  } catch (const json::exception &e) {
    throw Error(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open config " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    throw Error("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const ExperimentConfig &config,
                 const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out << to_json(config).dump(2) << '\n';
}

ExperimentConfig with_override(const ExperimentConfig &config,
                               const std::string &key, const json &value) {
  json j = to_json(config);
  json::json_pointer ptr("/" + [&] {
    std::string p = key;
    for (char &ch : p) {
      if (ch == '.') ch = '/';
    }
    return p;
  }());
  if (!j.contains(ptr)) {
    throw Error("grid: unknown config key '" + key + "'");
  }
  j[ptr] = value;
  return config_from_json(j);
}

std::vector<double> keep_prob_grid() {
  std::vector<double> out;
  for (int k = 0; k < 12; ++k) {
    out.push_back(std::pow(10.0, -2.0 + static_cast<double>(k) / 6.0));
  }
  return out;
}

Grid default_grid(ModelKind kind) {
  const std::vector<json> layers = {2, 3, 4, 5};
  const std::vector<json> units = {50, 65, 80, 100, 150, 200};
  switch (kind) {
  case ModelKind::Svgp:
    return {{"svgp.num_inducing", {200, 400, 800}}};
  case ModelKind::Dgp:
    return {{"dgp.num_inducing", {50, 100, 200}}};
  case ModelKind::Dspp:
    return {{"dspp.num_inducing", {50, 100, 200}},
            {"dspp.width", {2, 3}},
            {"dspp.num_points", {5, 8, 10, 15, 20}}};
  case ModelKind::Mcd: {
    std::vector<json> keep;
    for (double p : keep_prob_grid()) {
      keep.emplace_back(p);
    }
    return {{"mcd.hidden_layers", layers},
            {"mcd.hidden_units", units},
            {"mcd.keep_prob", keep}};
  }
  case ModelKind::Ffnn:
    return {{"ffnn.hidden_layers", layers}, {"ffnn.hidden_units", units}};
  }
  return {};
}

} // namespace rulgp
