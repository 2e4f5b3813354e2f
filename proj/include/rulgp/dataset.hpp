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

// Run-to-failure fleets: CSV ingestion, normalization and unit-wise splits.
//
// One file per unit, comma separated, header "unit_id,t,f_1,...,f_m,rul".

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rulgp/math_core.hpp"

namespace rulgp {

struct Unit {
  int id = 0;
  VectorXd t;
  MatrixXd features; // n_i x m
  VectorXd rul;

  Eigen::Index size() const { return rul.size(); }
};

struct NormalizationStats {
  VectorXd mean;
  VectorXd std;
};

inline constexpr double kStdFloor = 1e-8;

struct FleetDataset {
  std::vector<Unit> units;
  Eigen::Index feature_dim = 0;
  /// Set by normalize(); empty for raw data.
  NormalizationStats stats;

  const Unit &unit(int id) const;
  std::vector<int> unit_ids() const;
  /// Checks the invariants; errors name the unit and row.
  void validate() const;
};

FleetDataset load_fleet(const std::filesystem::path &dir);
/// Writes unit_<id>.csv files with shortest round-trip decimal values.
void save_fleet(const FleetDataset &data, const std::filesystem::path &dir);
Unit parse_unit_csv(const std::string &text, const std::string &source);

NormalizationStats compute_stats(const FleetDataset &data,
                                 const std::vector<int> &train_ids);
FleetDataset apply_stats(const FleetDataset &data,
                         const NormalizationStats &stats);
/// z-scores every unit with statistics from the train units only.
FleetDataset normalize(const FleetDataset &data,
                       const std::vector<int> &train_ids);

struct SplitSpec {
  std::vector<int> train_ids;
  std::vector<int> test_ids;
  /// Tail fraction of each training unit held out for validation.
  double validation_fraction = 0.1;

  void validate(const FleetDataset &data) const;
};

/// Rows stacked across units, with each row's unit and time.
struct Table {
  MatrixXd X;
  VectorXd y;
  std::vector<int> unit_id;
  std::vector<double> t;

  Eigen::Index rows() const { return y.size(); }
};

struct SplitTables {
  Table train;
  Table validation;
  Table test;
};

SplitTables make_split(const FleetDataset &data, const SplitSpec &split);
Table stack_units(const FleetDataset &data, const std::vector<int> &ids);

} // namespace rulgp
