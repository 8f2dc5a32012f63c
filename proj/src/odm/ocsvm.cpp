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

#include "miverify/odm/ocsvm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

#include "miverify/errors.hpp"

namespace miverify::odm {

std::string_view to_string(Verdict v) { return v == Verdict::kInlier ? "inlier" : "outlier"; }

std::vector<Point> canonical_order(std::vector<Point> points) {
  std::stable_sort(points.begin(), points.end());
  return points;
}

std::size_t check_points(const std::vector<Point>& points) {
  if (points.empty()) throw ValidationError("outlier detector needs at least one point");
  const std::size_t dim = points.front().size();
  if (dim == 0) throw ValidationError("points must have positive dimension");
  for (const auto& p : points) {
    if (p.size() != dim) throw ValidationError("points have inconsistent dimensions");
    for (double v : p) {
      if (!std::isfinite(v)) throw ValidationError("points must be finite");
    }
  }
  return dim;
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

namespace {

// LRU cache of kernel matrix columns.
class KernelColumns {
 public:
  KernelColumns(const std::vector<Point>& points, double gamma, std::size_t budget_bytes)
      : points_(points), gamma_(gamma) {
    const std::size_t per_column = std::max<std::size_t>(1, points.size() * sizeof(double));
    capacity_ = std::max<std::size_t>(2, budget_bytes / per_column);
  }

  const std::vector<double>& column(std::size_t i) {
    if (auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second;
    }
    if (index_.size() >= capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    std::vector<double> col(points_.size());
    for (std::size_t j = 0; j < points_.size(); ++j) {
      col[j] = rbf_kernel(points_[i], points_[j], gamma_);
    }
    lru_.emplace_front(i, std::move(col));
    index_[i] = lru_.begin();
    return lru_.front().second;
  }

 private:
  using Entry = std::pair<std::size_t, std::vector<double>>;
  const std::vector<Point>& points_;
  double gamma_;
  std::size_t capacity_;
  std::list<Entry> lru_;
  std::unordered_map<std::size_t, std::list<Entry>::iterator> index_;
};

constexpr double kTau = 1e-12;

}  // namespace

double OcsvmModel::decision(std::span<const double> x) const {
  if (x.size() != dim) throw ShapeError("ocsvm: query has the wrong dimension");
  double sum = 0.0;
  for (std::size_t s = 0; s < support_vectors.size(); ++s) {
    sum += alpha[s] * rbf_kernel(support_vectors[s], x, gamma);
  }
  return sum - rho;
}

OcsvmModel ocsvm_fit(const std::vector<Point>& input, const OcsvmOptions& options) {
  const std::size_t dim = check_points(input);
  const std::size_t n = input.size();
  if (n < 2) throw ValidationError("ocsvm needs at least 2 points");
  if (!(options.nu > 0.0 && options.nu <= 1.0)) throw ConfigError("ocsvm: nu must lie in (0, 1]");
  if (!(options.gamma > 0.0) || !std::isfinite(options.gamma)) {
    throw ConfigError("ocsvm: gamma must be positive");
  }
  if (!(options.tol > 0.0)) throw ConfigError("ocsvm: tol must be positive");

  const std::vector<Point> points = canonical_order(input);
  const double nu_n = options.nu * static_cast<double>(n);
  const double upper = 1.0 / nu_n;

  // Feasible start: floor(nu n) coefficients at the bound, the remainder on
  // the next one.
  std::vector<double> alpha(n, 0.0);
  const auto full = static_cast<std::size_t>(std::floor(nu_n));
  for (std::size_t i = 0; i < std::min(full, n); ++i) alpha[i] = upper;
  if (full < n) alpha[full] = 1.0 - static_cast<double>(full) * upper;

  KernelColumns kernel(points, options.gamma, options.cache_bytes);
  std::vector<double> grad(n, 0.0);  // grad = K alpha
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] == 0.0) continue;
    const auto& col = kernel.column(i);
    for (std::size_t t = 0; t < n; ++t) grad[t] += alpha[i] * col[t];
  }

  const std::size_t max_iter =
      options.max_iterations ? options.max_iterations : std::max<std::size_t>(1000000, 100 * n);
  auto below_upper = [&](std::size_t t) { return alpha[t] < upper; };
  auto above_lower = [&](std::size_t t) { return alpha[t] > 0.0; };

  std::size_t iter = 0;
  double violation = 0.0;
  for (;; ++iter) {
    // i: the coordinate that most wants to grow.
    std::size_t i = n;
    double g_min = std::numeric_limits<double>::infinity();
    double g_max = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      if (below_upper(t) && grad[t] < g_min) {
        g_min = grad[t];
        i = t;
      }
      if (above_lower(t)) g_max = std::max(g_max, grad[t]);
    }
    violation = g_max - g_min;
    if (i == n || violation < options.tol) break;
    if (iter >= max_iter) {
      throw ConvergenceError(violation, "ocsvm: SMO did not converge within " +
                                            std::to_string(max_iter) + " iterations");
    }

    // j: second-order choice among coordinates that can shrink.
    const auto& col_i = kernel.column(i);
    std::size_t j = n;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      if (!above_lower(t)) continue;
      const double b = grad[t] - g_min;
      if (b <= 0.0) continue;
      double a = 2.0 - 2.0 * col_i[t];  // K_ii = K_tt = 1 for RBF
      if (a <= 0.0) a = kTau;
      const double gain = b * b / a;
      if (gain > best) {
        best = gain;
        j = t;
      }
    }
    if (j == n) break;

    const auto col_i_copy = col_i;  // column(j) may evict column(i)
    const auto& col_j = kernel.column(j);
    double curvature = 2.0 - 2.0 * col_i_copy[j];
    if (curvature <= 0.0) curvature = kTau;
    double delta = (grad[j] - grad[i]) / curvature;
    delta = std::min({delta, upper - alpha[i], alpha[j]});
    if (delta <= 0.0) break;

    alpha[i] += delta;
    alpha[j] -= delta;
    // Snap to the bounds to keep the active sets exact.
    if (upper - alpha[i] <= 1e-15 * upper) alpha[i] = upper;
    if (alpha[j] <= 1e-15 * upper) alpha[j] = 0.0;
    for (std::size_t t = 0; t < n; ++t) grad[t] += delta * (col_i_copy[t] - col_j[t]);
  }

  // Recompute K alpha exactly in index order; decision() sums support
  // vectors in the same order, so margin vectors score the same value.
  std::vector<std::size_t> sv;
  for (std::size_t s = 0; s < n; ++s) {
    if (alpha[s] != 0.0) sv.push_back(s);
  }
  for (std::size_t t = 0; t < n; ++t) {
    double sum = 0.0;
    for (std::size_t s : sv) sum += alpha[s] * rbf_kernel(points[s], points[t], options.gamma);
    grad[t] = sum;
  }

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0, free_min = ub, free_max = lb;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] >= upper) {
      lb = std::max(lb, grad[t]);
    } else if (alpha[t] <= 0.0) {
      ub = std::min(ub, grad[t]);
    } else {
      free_sum += grad[t];
      free_min = std::min(free_min, grad[t]);
      free_max = std::max(free_max, grad[t]);
      ++free_count;
    }
  }
  double rho;
  if (free_count > 0) {
    rho = free_min == free_max ? free_min : free_sum / static_cast<double>(free_count);
  } else if (std::isinf(ub)) {
    rho = lb;
  } else if (std::isinf(lb)) {
    rho = ub;
  } else {
    rho = 0.5 * (ub + lb);
  }

  OcsvmModel model;
  model.dim = dim;
  model.n_train = n;
  model.nu = options.nu;
  model.gamma = options.gamma;
  model.rho = rho;
  model.iterations = iter;
  model.kkt_violation = std::max(0.0, violation);
  double objective = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    objective += alpha[t] * grad[t];
    if (alpha[t] > 0.0) {
      model.support_vectors.push_back(points[t]);
      model.alpha.push_back(alpha[t]);
    }
  }
  model.objective = 0.5 * objective;
  return model;
}

}  // namespace miverify::odm
