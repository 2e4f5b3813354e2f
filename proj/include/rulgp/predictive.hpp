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

#pragma once

#include <variant>
#include <vector>

#include "rulgp/math_core.hpp"

namespace rulgp {

struct MixtureComponent {
  double weight = 1.0;
  GaussianDist dist;
};

/// Weighted Gaussian mixture; weights lie on the simplex.
struct MixturePredictive {
  std::vector<MixtureComponent> components;

  void validate() const;
};

/// Per-input predictive distribution of any model family.
using Predictive = std::variant<GaussianDist, MixturePredictive>;

/// Mean and total variance: sum w (s^2 + mu^2) - mean^2.
GaussianDist mixture_moments(const MixturePredictive &p);
GaussianDist predictive_moments(const Predictive &p);

/// log p(y); mixtures go through log-sum-exp.
double predictive_log_density(const Predictive &p, double y);

/// Maps a prediction made on standardized targets back to natural units.
Predictive rescale(const Predictive &p, double offset, double scale);

} // namespace rulgp
