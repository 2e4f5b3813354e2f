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

#include "rulgp/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace rulgp {

namespace fs = std::filesystem;

const Unit &FleetDataset::unit(int id) const {
  for (const auto &u : units) {
    if (u.id == id) {
      return u;
    }
  }
  throw Error("unknown unit id " + std::to_string(id));
}

std::vector<int> FleetDataset::unit_ids() const {
  std::vector<int> ids;
  for (const auto &u : units) {
    ids.push_back(u.id);
  }
  return ids;
}

void FleetDataset::validate() const {
  std::set<int> seen;
  for (const auto &u : units) {
    const std::string name = "unit " + std::to_string(u.id);
    if (!seen.insert(u.id).second) {
      throw Error("duplicate " + name);
    }
    if (u.size() < 2) {
      throw Error(name + " has fewer than two rows");
    }
    if (u.features.cols() != feature_dim) {
      throw DimensionError(name + " has " + std::to_string(u.features.cols()) +
                           " features, fleet has " +
                           std::to_string(feature_dim));
    }
    if (u.features.rows() != u.size() || u.t.size() != u.size()) {
      throw DimensionError(name + " has inconsistent row counts");
    }
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (!std::isfinite(u.rul(i))) {
        throw Error(name + ": non-finite rul at row " + std::to_string(i + 1));
      }
      if (i > 0 && u.rul(i) > u.rul(i - 1)) {
        throw Error(name + ": rul increases at row " + std::to_string(i + 1));
      }
    }
    if (u.rul(u.size() - 1) < 0.0) {
      throw Error(name + ": rul ends below zero");
    }
  }
}

namespace {

std::vector<std::string> split_fields(const std::string &line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) {
      field.pop_back();
    }
    while (!field.empty() && field.front() == ' ') {
      field.erase(field.begin());
    }
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

double parse_cell(const std::string &cell, const std::string &source,
                  std::size_t row, std::size_t column) {
  double v = 0.0;
  const char *begin = cell.data();
  const char *end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (cell.empty() || ec != std::errc() || ptr != end) {
    throw Error(source + ": cannot parse '" + cell + "' at line " +
                std::to_string(row) + ", column " + std::to_string(column));
  }
  return v;
}

std::string format(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, end);
}

} // namespace

Unit parse_unit_csv(const std::string &text, const std::string &source) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) {
    throw Error(source + ": empty file");
  }
  const auto header = split_fields(line);
  if (header.size() < 4 || header[0] != "unit_id" || header[1] != "t" ||
      header.back() != "rul") {
    throw Error(source + ": header must be unit_id,t,f_1..f_m,rul");
  }
  const std::size_t m = header.size() - 3;
  for (std::size_t k = 0; k < m; ++k) {
    if (header[k + 2] != "f_" + std::to_string(k + 1)) {
      throw Error(source + ": header column " + std::to_string(k + 3) +
                  " should be f_" + std::to_string(k + 1));
    }
  }
  std::vector<std::vector<double>> rows;
  int id = 0;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") {
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw Error(source + ": line " + std::to_string(row) + " has " +
                  std::to_string(fields.size()) + " columns, expected " +
                  std::to_string(header.size()));
    }
    std::vector<double> values;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      values.push_back(parse_cell(fields[c], source, row, c + 1));
    }
    const int row_id = static_cast<int>(values[0]);
    if (static_cast<double>(row_id) != values[0]) {
      throw Error(source + ": unit_id is not an integer at line " +
                  std::to_string(row));
    }
    if (rows.empty()) {
      id = row_id;
    } else if (row_id != id) {
      throw Error(source + ": unit_id changes at line " + std::to_string(row));
    }
    rows.push_back(std::move(values));
  }
  Unit u;
  u.id = id;
  const auto n = static_cast<Eigen::Index>(rows.size());
  u.t.resize(n);
  u.features.resize(n, static_cast<Eigen::Index>(m));
  u.rul.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto &r = rows[static_cast<std::size_t>(i)];
    u.t(i) = r[1];
    for (std::size_t k = 0; k < m; ++k) {
      u.features(i, static_cast<Eigen::Index>(k)) = r[k + 2];
    }
    u.rul(i) = r.back();
  }
  return u;
}

FleetDataset load_fleet(const fs::path &dir) {
  if (!fs::is_directory(dir)) {
    throw Error("data directory " + dir.string() + " does not exist");
  }
  std::vector<fs::path> files;
  for (const auto &entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw Error("no .csv unit files in " + dir.string());
  }
  FleetDataset data;
  for (const auto &f : files) {
    std::ifstream in(f);
    std::stringstream buf;
    buf << in.rdbuf();
    Unit u = parse_unit_csv(buf.str(), f.string());
    if (data.units.empty()) {
      data.feature_dim = u.features.cols();
    } else if (u.features.cols() != data.feature_dim) {
      throw DimensionError(f.string() + " has " +
                           std::to_string(u.features.cols()) +
                           " features, earlier files have " +
                           std::to_string(data.feature_dim));
    }
    data.units.push_back(std::move(u));
  }
  std::sort(data.units.begin(), data.units.end(),
            [](const Unit &a, const Unit &b) { return a.id < b.id; });
  data.validate();
  return data;
}

void save_fleet(const FleetDataset &data, const fs::path &dir) {
  data.validate();
  fs::create_directories(dir);
  for (const auto &u : data.units) {
    std::ofstream out(dir / ("unit_" + std::to_string(u.id) + ".csv"));
    if (!out) {
      throw Error("cannot write to " + dir.string());
    }
    out << "unit_id,t";
    for (Eigen::Index k = 0; k < data.feature_dim; ++k) {
      out << ",f_" << k + 1;
    }
    out << ",rul\n";
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      out << u.id << ',' << format(u.t(i));
      for (Eigen::Index k = 0; k < data.feature_dim; ++k) {
        out << ',' << format(u.features(i, k));
      }
      out << ',' << format(u.rul(i)) << '\n';
    }
  }
}

NormalizationStats compute_stats(const FleetDataset &data,
                                 const std::vector<int> &train_ids) {
  if (train_ids.empty()) {
    throw Error("normalize: no training units selected");
  }
  const Eigen::Index m = data.feature_dim;
  VectorXd sum = VectorXd::Zero(m);
  double count = 0.0;
  for (int id : train_ids) {
    const Unit &u = data.unit(id);
    sum += u.features.colwise().sum().transpose();
    count += static_cast<double>(u.size());
  }
  NormalizationStats s;
  s.mean = sum / count;
  VectorXd ss = VectorXd::Zero(m);
  for (int id : train_ids) {
    const Unit &u = data.unit(id);
    ss += (u.features.rowwise() - s.mean.transpose())
              .array()
              .square()
              .colwise()
              .sum()
              .matrix()
              .transpose();
  }
  s.std = (ss / count).array().sqrt().max(kStdFloor).matrix();
  return s;
}

FleetDataset apply_stats(const FleetDataset &data,
                         const NormalizationStats &stats) {
  if (stats.mean.size() != data.feature_dim ||
      stats.std.size() != data.feature_dim) {
    throw DimensionError("normalization stats do not match feature count");
  }
  FleetDataset out = data;
  for (auto &u : out.units) {
    u.features = ((u.features.rowwise() - stats.mean.transpose()).array()
                      .rowwise() /
                  stats.std.transpose().array())
                     .matrix();
  }
  out.stats = stats;
  return out;
}

FleetDataset normalize(const FleetDataset &data,
                       const std::vector<int> &train_ids) {
  return apply_stats(data, compute_stats(data, train_ids));
}

void SplitSpec::validate(const FleetDataset &data) const {
  if (train_ids.empty()) {
    throw Error("split: no training units");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw Error("split: validation fraction must lie in [0, 1)");
  }
  std::set<int> train(train_ids.begin(), train_ids.end());
  for (int id : test_ids) {
    if (train.count(id) != 0) {
      throw Error("split: unit " + std::to_string(id) +
                  " is both a train and a test unit");
    }
    data.unit(id);
  }
  for (int id : train_ids) {
    data.unit(id);
  }
}

namespace {

void append(Table &table, const Unit &u, Eigen::Index begin,
            Eigen::Index end) {
  const Eigen::Index len = end - begin;
  if (len <= 0) {
    return;
  }
  const Eigen::Index old = table.rows();
  MatrixXd X(old + len, u.features.cols());
  if (old > 0) {
    X.topRows(old) = table.X;
  }
  X.bottomRows(len) = u.features.middleRows(begin, len);
  VectorXd y(old + len);
  y.head(old) = table.y;
  y.tail(len) = u.rul.segment(begin, len);
  table.X = std::move(X);
  table.y = std::move(y);
  for (Eigen::Index i = begin; i < end; ++i) {
    table.unit_id.push_back(u.id);
    table.t.push_back(u.t(i));
  }
}

} // namespace

Table stack_units(const FleetDataset &data, const std::vector<int> &ids) {
  Table t;
  t.X.resize(0, data.feature_dim);
  for (int id : ids) {
    const Unit &u = data.unit(id);
    append(t, u, 0, u.size());
  }
  return t;
}

SplitTables make_split(const FleetDataset &data, const SplitSpec &split) {
  split.validate(data);
  SplitTables out;
  out.train.X.resize(0, data.feature_dim);
  out.validation.X.resize(0, data.feature_dim);
  for (int id : split.train_ids) {
    const Unit &u = data.unit(id);
    const auto held = static_cast<Eigen::Index>(
        std::floor(split.validation_fraction * static_cast<double>(u.size())));
    append(out.train, u, 0, u.size() - held);
    append(out.validation, u, u.size() - held, u.size());
  }
  out.test = stack_units(data, split.test_ids);
  return out;
}

} // namespace rulgp
