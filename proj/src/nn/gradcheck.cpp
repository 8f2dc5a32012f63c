/*
 * Copyright 2026 The miverify Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "miverify/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "miverify/errors.hpp"
#include "miverify/rng.hpp"

namespace miverify::nn {

namespace {

double finite_or_throw(double v) {
  if (!std::isfinite(v)) throw Error("gradient check: loss is not finite");
  return v;
}

double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max(1e-12, std::abs(a) + std::abs(b));
}

}  // namespace

GradCheckReport grad_check_report(ParameterSet& params, const LossFn& loss,
                                  const GradCheckOptions& options) {
  params.zero_grad();
  finite_or_throw(loss(true));

  std::vector<std::pair<std::size_t, Eigen::Index>> coords;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (Eigen::Index k = 0; k < params[p].value.size(); ++k) coords.emplace_back(p, k);
  }
  if (coords.size() > options.max_coords) {
    Rng rng(options.seed);
    rng.shuffle(std::span(coords));
    coords.resize(options.max_coords);
  }

  std::vector<double> analytic;
  analytic.reserve(coords.size());
  for (auto [p, k] : coords) analytic.push_back(params[p].grad.data()[k]);

  GradCheckReport report;
  for (std::size_t n = 0; n < coords.size(); ++n) {
    auto [p, k] = coords[n];
    double& slot = params[p].value.data()[k];
    const double saved = slot;
    auto at = [&](double offset) {
      slot = saved + offset;
      return finite_or_throw(loss(false));
    };
    auto stencil = [&](double h) {
      const double near = at(h) - at(-h);
      const double far = at(2.0 * h) - at(-2.0 * h);
      return (8.0 * near - far) / (12.0 * h);
    };
    const double numeric = stencil(options.epsilon);
    bool kink = false;
    if (options.skip_kinks) {
      kink = relative_gap(numeric, stencil(0.5 * options.epsilon)) > options.kink_tolerance;
    }
    slot = saved;

    if (kink) {
      ++report.kinks;
      continue;
    }
    ++report.checked;
    report.max_rel_error = std::max(report.max_rel_error, relative_gap(analytic[n], numeric));
  }
  return report;
}

double finite_diff_grad_check(ParameterSet& params, const LossFn& loss,
                              const GradCheckOptions& options) {
  return grad_check_report(params, loss, options).max_rel_error;
}

}  // namespace miverify::nn
