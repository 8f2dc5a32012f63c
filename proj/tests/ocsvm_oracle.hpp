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

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "miverify/odm/ocsvm.hpp"

namespace miverify::testing {

// Brute-force minimum of 0.5 a^T K a over {0 <= a_i <= C, sum a = 1} for
// n <= 4: a dense grid over the first n-1 coordinates (the last one is
// implied by the simplex), then repeated zooms around the best cell.
inline double ocsvm_dual_grid_search(const std::vector<odm::Point>& points, double nu,
                                     double gamma) {
  const std::size_t n = points.size();
  const double c = 1.0 / (nu * static_cast<double>(n));
  std::vector<std::vector<double>> k(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k[i][j] = odm::rbf_kernel(points[i], points[j], gamma);
  }
  auto objective = [&](const std::vector<double>& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) s += a[i] * a[j] * k[i][j];
    }
    return 0.5 * s;
  };

  const std::size_t free = n - 1;
  std::vector<double> best_a(n, 0.0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> lo(free, 0.0), hi(free, std::min(c, 1.0));
  const int steps = n == 4 ? 120 : 400;
  for (int round = 0; round < 12; ++round) {
    std::vector<double> step(free);
    for (std::size_t d = 0; d < free; ++d) step[d] = (hi[d] - lo[d]) / steps;
    std::vector<int> idx(free, 0);
    std::vector<double> a(n);
    while (true) {
      double sum = 0.0;
      for (std::size_t d = 0; d < free; ++d) {
        a[d] = lo[d] + step[d] * idx[d];
        sum += a[d];
      }
      a[n - 1] = 1.0 - sum;
      const bool feasible = a[n - 1] >= -1e-15 && a[n - 1] <= c + 1e-15 &&
                            std::all_of(a.begin(), a.end() - 1,
                                        [&](double v) { return v >= -1e-15 && v <= c + 1e-15; });
      if (feasible) {
        const double f = objective(a);
        if (f < best) {
          best = f;
          best_a = a;
        }
      }
      std::size_t d = 0;
      while (d < free && ++idx[d] > steps) idx[d++] = 0;
      if (d == free) break;
      if (free == 0) break;
    }
    if (free == 0) break;
    for (std::size_t d = 0; d < free; ++d) {
      const double half = 3.0 * step[d];
      lo[d] = std::max(0.0, best_a[d] - half);
      hi[d] = std::min(c, best_a[d] + half);
    }
  }
  return best;
}

}  // namespace miverify::testing
