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

// Prognostics metrics over RUL predictions.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rulgp/predictive.hpp"

namespace rulgp::metrics {

inline constexpr double kDefaultAlpha = 0.2;

struct PredictionRecord {
  int unit_id = 0;
  double t = 0.0;
  double rul_true = 0.0;
  Predictive predictive;
  /// Point predictions (FFNN) carry only a mean; density metrics skip them.
  bool point_only = false;
};

/// Predictive mean, via mixture moments for mixtures.
double point_prediction(const PredictionRecord &r);

double rmse(const std::vector<PredictionRecord> &records);
/// Mean of -log p(rul_true) over records.
double nll(const std::vector<PredictionRecord> &records);
/// Fraction of records with (1 - alpha) rul <= mean <= (1 + alpha) rul.
/// Records with rul_true == 0 are skipped.
double alpha_lambda(const std::vector<PredictionRecord> &records,
                    double alpha);
/// Mean probability mass of the moment-matched Gaussian inside the band.
/// Records with rul_true == 0 are skipped.
double prob_alpha_lambda(const std::vector<PredictionRecord> &records,
                         double alpha);

struct UnitMetrics {
  int unit_id = 0;
  std::size_t count = 0;
  double rmse = 0.0;
  std::optional<double> nll;
  std::optional<double> alpha_lambda;
  std::optional<double> prob_alpha_lambda;
  std::size_t zero_rul = 0;
};

struct MetricsReport {
  std::size_t count = 0;
  double rmse = 0.0;
  std::optional<double> nll;
  std::optional<double> alpha_lambda;
  std::optional<double> prob_alpha_lambda;
  double alpha = kDefaultAlpha;
  /// Records with rul_true == 0, left out of both alpha-lambda metrics.
  std::size_t zero_rul = 0;
  std::vector<UnitMetrics> per_unit; // ascending unit id
};

MetricsReport evaluate(const std::vector<PredictionRecord> &records,
                       double alpha = kDefaultAlpha);

/// Flat "key = value" text: rmse, nll, alpha_lambda, prob_alpha_lambda,
/// alpha, count, zero_rul and per_unit.<id>.<metric>.
std::string to_text(const MetricsReport &report);
std::string to_json(const MetricsReport &report);
MetricsReport report_from_json(const std::string &text);

/// Shortest round-tripping decimal form of x.
std::string format_double(double x);

} // namespace rulgp::metrics
