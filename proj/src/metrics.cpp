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

#include "rulgp/metrics.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

namespace rulgp::metrics {

namespace {

void require_nonempty(const std::vector<PredictionRecord> &records,
                      const char *what) {
  if (records.empty()) {
    throw Error(std::string(what) + ": no records");
  }
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0)) {
    throw Error("alpha must be positive, got " + std::to_string(alpha));
  }
}

} // namespace

double point_prediction(const PredictionRecord &r) {
  return predictive_moments(r.predictive).mean;
}

double rmse(const std::vector<PredictionRecord> &records) {
  require_nonempty(records, "rmse");
  double total = 0.0;
  for (const auto &r : records) {
    const double e = point_prediction(r) - r.rul_true;
    total += e * e;
  }
  return std::sqrt(total / static_cast<double>(records.size()));
}

double nll(const std::vector<PredictionRecord> &records) {
  require_nonempty(records, "nll");
  double total = 0.0;
  for (const auto &r : records) {
    if (r.point_only) {
      throw Error("nll: record of unit " + std::to_string(r.unit_id) +
                  " has no predictive distribution");
    }
    const double lp = predictive_log_density(r.predictive, r.rul_true);
    if (!std::isfinite(lp)) {
      throw NumericalError("nll: non-finite predictive density");
    }
    total -= lp;
  }
  return total / static_cast<double>(records.size());
}

double alpha_lambda(const std::vector<PredictionRecord> &records,
                    double alpha) {
  require_nonempty(records, "alpha_lambda");
  require_alpha(alpha);
  std::size_t used = 0;
  std::size_t hits = 0;
  for (const auto &r : records) {
    if (r.rul_true == 0.0) {
      continue;
    }
    const double p = point_prediction(r);
    ++used;
    if ((1.0 - alpha) * r.rul_true <= p && p <= (1.0 + alpha) * r.rul_true) {
      ++hits;
    }
  }
  if (used == 0) {
    throw Error("alpha_lambda: every record has zero RUL");
  }
  return static_cast<double>(hits) / static_cast<double>(used);
}

double prob_alpha_lambda(const std::vector<PredictionRecord> &records,
                         double alpha) {
  require_nonempty(records, "prob_alpha_lambda");
  require_alpha(alpha);
  std::size_t used = 0;
  double total = 0.0;
  for (const auto &r : records) {
    if (r.rul_true == 0.0) {
      continue;
    }
    if (r.point_only) {
      throw Error("prob_alpha_lambda: record of unit " +
                  std::to_string(r.unit_id) + " has no predictive distribution");
    }
    const GaussianDist g = predictive_moments(r.predictive);
    const double sd = std::sqrt(g.variance);
    total += gaussian_cdf((1.0 + alpha) * r.rul_true, g.mean, sd) -
             gaussian_cdf((1.0 - alpha) * r.rul_true, g.mean, sd);
    ++used;
  }
  if (used == 0) {
    throw Error("prob_alpha_lambda: every record has zero RUL");
  }
  return total / static_cast<double>(used);
}

namespace {

template <class Fill>
void fill_metrics(const std::vector<PredictionRecord> &records, double alpha,
                  Fill &&out) {
  out.count = records.size();
  out.rmse = rmse(records);
  bool point_only = false;
  for (const auto &r : records) {
    point_only = point_only || r.point_only;
    if (r.rul_true == 0.0) {
      ++out.zero_rul;
    }
  }
  if (!point_only) {
    out.nll = nll(records);
  }
  if (out.zero_rul < records.size()) {
    out.alpha_lambda = alpha_lambda(records, alpha);
    if (!point_only) {
      out.prob_alpha_lambda = prob_alpha_lambda(records, alpha);
    }
  }
}

} // namespace

MetricsReport evaluate(const std::vector<PredictionRecord> &records,
                       double alpha) {
  require_nonempty(records, "evaluate");
  require_alpha(alpha);
  MetricsReport report;
  report.alpha = alpha;
  fill_metrics(records, alpha, report);
  std::map<int, std::vector<PredictionRecord>> by_unit;
  for (const auto &r : records) {
    by_unit[r.unit_id].push_back(r);
  }
  for (const auto &[id, unit_records] : by_unit) {
    UnitMetrics u;
    u.unit_id = id;
    fill_metrics(unit_records, alpha, u);
    report.per_unit.push_back(u);
  }
  return report;
}

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) {
    throw Error("format_double failed");
  }
  return std::string(buf, end);
}

std::string to_text(const MetricsReport &report) {
  std::ostringstream os;
  auto put = [&](const std::string &key, const std::optional<double> &v) {
    os << key << " = " << (v ? format_double(*v) : "NA") << '\n';
  };
  os << "# nll is the per-sample mean negative log predictive density\n";
  os << "# alpha-lambda metrics exclude records with zero RUL (zero_rul)\n";
  os << "count = " << report.count << '\n';
  put("rmse", report.rmse);
  put("nll", report.nll);
  put("alpha_lambda", report.alpha_lambda);
  put("prob_alpha_lambda", report.prob_alpha_lambda);
  put("alpha", report.alpha);
  os << "zero_rul = " << report.zero_rul << '\n';
  for (const auto &u : report.per_unit) {
    const std::string p = "per_unit." + std::to_string(u.unit_id) + ".";
    os << p << "count = " << u.count << '\n';
    put(p + "rmse", u.rmse);
    put(p + "nll", u.nll);
    put(p + "alpha_lambda", u.alpha_lambda);
    put(p + "prob_alpha_lambda", u.prob_alpha_lambda);
    os << p << "zero_rul = " << u.zero_rul << '\n';
  }
  return os.str();
}

namespace {

nlohmann::json optional_json(const std::optional<double> &v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json &j) {
  if (j.is_null()) {
    return std::nullopt;
  }
  return j.get<double>();
}

} // namespace

std::string to_json(const MetricsReport &report) {
  nlohmann::json j;
  j["count"] = report.count;
  j["rmse"] = report.rmse;
  j["nll"] = optional_json(report.nll);
  j["alpha_lambda"] = optional_json(report.alpha_lambda);
  j["prob_alpha_lambda"] = optional_json(report.prob_alpha_lambda);
  j["alpha"] = report.alpha;
  j["zero_rul"] = report.zero_rul;
  j["per_unit"] = nlohmann::json::array();
  for (const auto &u : report.per_unit) {
    j["per_unit"].push_back({{"unit_id", u.unit_id},
                             {"count", u.count},
                             {"rmse", u.rmse},
                             {"nll", optional_json(u.nll)},
                             {"alpha_lambda", optional_json(u.alpha_lambda)},
                             {"prob_alpha_lambda",
                              optional_json(u.prob_alpha_lambda)},
                             {"zero_rul", u.zero_rul}});
  }
  return j.dump(2);
}

MetricsReport report_from_json(const std::string &text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  MetricsReport r;
  r.count = j.at("count").get<std::size_t>();
  r.rmse = j.at("rmse").get<double>();
  r.nll = optional_from(j.at("nll"));
  r.alpha_lambda = optional_from(j.at("alpha_lambda"));
  r.prob_alpha_lambda = optional_from(j.at("prob_alpha_lambda"));
  r.alpha = j.at("alpha").get<double>();
  r.zero_rul = j.at("zero_rul").get<std::size_t>();
  for (const auto &u : j.at("per_unit")) {
    UnitMetrics m;
    m.unit_id = u.at("unit_id").get<int>();
    m.count = u.at("count").get<std::size_t>();
    m.rmse = u.at("rmse").get<double>();
    m.nll = optional_from(u.at("nll"));
    m.alpha_lambda = optional_from(u.at("alpha_lambda"));
    m.prob_alpha_lambda = optional_from(u.at("prob_alpha_lambda"));
    m.zero_rul = u.at("zero_rul").get<std::size_t>();
    r.per_unit.push_back(m);
  }
  return r;
}

} // namespace rulgp::metrics
