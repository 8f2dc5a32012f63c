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

#pragma once

#include <cstdint>
#include <functional>

#include "miverify/nn/parameters.hpp"

namespace miverify::nn {

struct GradCheckOptions {
  double epsilon = 3e-4;
  std::size_t max_coords = 200;
  std::uint64_t seed = 0;
  // Also difference with step epsilon/2. Coordinates where the two numeric
  // estimates disagree by more than kink_tolerance (relative) sit within a few
  // steps of a ReLU or hinge kink; they are counted and left out of the max.
  bool skip_kinks = false;
  double kink_tolerance = 1e-6;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t kinks = 0;
};

// `loss(true)` must evaluate the loss and accumulate analytic gradients into
// the parameter buffers; `loss(false)` evaluates the loss only. Both must be
// deterministic functions of the current parameter values.
using LossFn = std::function<double(bool with_grad)>;

// Fourth-order central difference
//   (8 (f(x+h) - f(x-h)) - (f(x+2h) - f(x-2h))) / 12h
// over a random subsample of at most max_coords
// scalar coordinates. Returns the maximum over the sample of
//   |g_analytic - g_numeric| / max(1e-12, |g_analytic| + |g_numeric|).
// Parameter values are restored afterwards. Throws on a non-finite loss.
GradCheckReport grad_check_report(ParameterSet& params, const LossFn& loss,
                                  const GradCheckOptions& options = {});

// grad_check_report(...).max_rel_error
double finite_diff_grad_check(ParameterSet& params, const LossFn& loss,
                              const GradCheckOptions& options = {});

}  // namespace miverify::nn
