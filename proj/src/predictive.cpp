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

#include "rulgp/predictive.hpp"

#include <cmath>

namespace rulgp {

void MixturePredictive::validate() const {
  if (components.empty()) {
    throw Error("mixture has no components");
  }
  double total = 0.0;
  for (const auto &c : components) {
    if (c.weight < 0.0) {
      throw Error("mixture weight is negative");
    }
    if (!(c.dist.variance > 0.0)) {
      throw Error("mixture component variance must be positive");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error("mixture weights sum to " + std::to_string(total));
  }
}

GaussianDist mixture_moments(const MixturePredictive &p) {
  double mean = 0.0;
  for (const auto &c : p.components) {
    mean += c.weight * c.dist.mean;
  }
  // sum w (s^2 + mu^2) - mean^2, written as within + between spread so it
  // cannot round below the component variances.
  double var = 0.0;
  for (const auto &c : p.components) {
    const double r = c.dist.mean - mean;
    var += c.weight * (c.dist.variance + r * r);
  }
  return {mean, var};
}

GaussianDist predictive_moments(const Predictive &p) {
  if (const auto *g = std::get_if<GaussianDist>(&p)) {
    return *g;
  }
  return mixture_moments(std::get<MixturePredictive>(p));
}

double predictive_log_density(const Predictive &p, double y) {
  if (const auto *g = std::get_if<GaussianDist>(&p)) {
    return gaussian_log_pdf(y, g->mean, g->variance);
  }
  const auto &mix = std::get<MixturePredictive>(p);
  std::vector<double> terms;
  terms.reserve(mix.components.size());
  for (const auto &c : mix.components) {
    if (c.weight > 0.0) {
      terms.push_back(std::log(c.weight) +
                      gaussian_log_pdf(y, c.dist.mean, c.dist.variance));
    }
  }
  const double out = log_sum_exp(terms);
  if (!std::isfinite(out)) {
    throw NumericalError("mixture log density is not finite");
  }
  return out;
}

Predictive rescale(const Predictive &p, double offset, double scale) {
  auto map = [&](const GaussianDist &g) {
    return GaussianDist{offset + scale * g.mean, scale * scale * g.variance};
  };
  if (const auto *g = std::get_if<GaussianDist>(&p)) {
    return map(*g);
  }
  MixturePredictive out = std::get<MixturePredictive>(p);
  for (auto &c : out.components) {
    c.dist = map(c.dist);
  }
  return out;
}

} // namespace rulgp
