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

#include "rulgp/checkpoint.hpp"

#include <fstream>
#include <sstream>

namespace rulgp {

using nlohmann::json;

namespace {

json vector_json(const VectorXd &v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

VectorXd vector_from(const json &j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(values.data(),
                                    static_cast<Eigen::Index>(values.size()));
}

} // namespace

std::string checkpoint_to_string(const Checkpoint &ckpt) {
  json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["config"] = to_json(ckpt.config);
  j["input_dim"] = ckpt.input_dim;
  j["normalization"] = {{"mean", vector_json(ckpt.stats.mean)},
                        {"std", vector_json(ckpt.stats.std)}};
  j["target"] = {{"offset", ckpt.target_offset}, {"scale", ckpt.target_scale}};
  j["train_units"] = ckpt.train_units;
  j["test_units"] = ckpt.test_units;
  json arrays = json::array();
  for (const ParamSlice &s : ckpt.params.layout()) {
    const MatrixXd raw = ckpt.params.raw(s.name);
    arrays.push_back({{"name", s.name},
                      {"rows", s.rows},
                      {"cols", s.cols},
                      {"transform", to_string(s.transform)},
                      {"trainable", s.trainable},
                      {"dtype", "float64"},
                      {"order", "column-major"},
                      {"raw", std::vector<double>(raw.data(),
                                                  raw.data() + raw.size())}});
  }
  j["params"] = arrays;
  return j.dump(1);
}

Checkpoint checkpoint_from_string(const std::string &text) {
  Checkpoint ckpt;
  try {
    const json j = json::parse(text);
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw Error("checkpoint format version " + std::to_string(version) +
                  " is not supported");
    }
    ckpt.config = config_from_json(j.at("config"));
    ckpt.input_dim = j.at("input_dim").get<Eigen::Index>();
    ckpt.stats.mean = vector_from(j.at("normalization").at("mean"));
    ckpt.stats.std = vector_from(j.at("normalization").at("std"));
    ckpt.target_offset = j.at("target").at("offset").get<double>();
    ckpt.target_scale = j.at("target").at("scale").get<double>();
    ckpt.train_units = j.at("train_units").get<std::vector<int>>();
    ckpt.test_units = j.at("test_units").get<std::vector<int>>();
    for (const json &a : j.at("params")) {
      const auto name = a.at("name").get<std::string>();
      const auto rows = a.at("rows").get<Eigen::Index>();
      const auto cols = a.at("cols").get<Eigen::Index>();
      const auto raw = a.at("raw").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(raw.size()) != rows * cols) {
        throw Error("checkpoint: array '" + name + "' has " +
                    std::to_string(raw.size()) + " values for shape " +
                    std::to_string(rows) + "x" + std::to_string(cols));
      }
      ckpt.params.add_raw(
          name, Eigen::Map<const MatrixXd>(raw.data(), rows, cols),
          transform_from_string(a.at("transform").get<std::string>()));
      ckpt.params.set_trainable(name, a.at("trainable").get<bool>());
    }
  } catch (const json::exception &e) {
    throw Error(std::string("checkpoint: ") + e.what());
  }
  if (ckpt.stats.mean.size() != ckpt.input_dim ||
      ckpt.stats.std.size() != ckpt.input_dim) {
    throw DimensionError("checkpoint: normalization stats do not match "
                         "input_dim");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint &ckpt,
                     const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write checkpoint " + path.string());
  }
  out << checkpoint_to_string(ckpt) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open checkpoint " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str());
}

} // namespace rulgp
