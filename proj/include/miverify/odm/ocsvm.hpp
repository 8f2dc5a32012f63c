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
#include <span>
#include <vector>

#include "miverify/odm/common.hpp"

namespace miverify::odm {

struct OcsvmOptions {
  double nu = 0.1;
  double gamma = 1.0;
  double tol = 1e-6;
  // Working-pair updates before giving up; 0 picks max(1e6, 100 n).
  std::size_t max_iterations = 0;
  // Kernel column cache budget.
  std::size_t cache_bytes = std::size_t{256} << 20;
};

// Fitted one-class SVM with an RBF kernel K(x, y) = exp(-gamma |x - y|^2).
// Dual coefficients live on the simplex sum(alpha) = 1 with
// 0 <= alpha_i <= 1/(nu n).
struct OcsvmModel {
  std::size_t dim = 0;
  std::size_t n_train = 0;
  double nu = 0.1;
  double gamma = 1.0;
  double rho = 0.0;
  std::vector<Point> support_vectors;
  std::vector<double> alpha;  // one per support vector
  // Solver diagnostics.
  double objective = 0.0;      // 0.5 alpha^T K alpha at convergence
  double kkt_violation = 0.0;  // max_{I_low} G - min_{I_up} G
  std::size_t iterations = 0;

  double upper_bound() const { return 1.0 / (nu * static_cast<double>(n_train)); }

  // sum_i alpha_i K(sv_i, x) - rho
  double decision(std::span<const double> x) const;
  Verdict predict(std::span<const double> x) const {
    return decision(x) >= 0.0 ? Verdict::kInlier : Verdict::kOutlier;
  }
};

// Solves min 0.5 a^T K a over the box-constrained simplex with SMO-style
// pairwise updates (second-order working-set selection) until the maximal
// KKT violation drops below tol. Throws ConvergenceError at the iteration cap.
OcsvmModel ocsvm_fit(const std::vector<Point>& points, const OcsvmOptions& options);

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

}  // namespace miverify::odm
