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

#include "miverify/odm/iforest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "miverify/errors.hpp"
#include "miverify/rng.hpp"

namespace miverify::odm {

namespace {
constexpr double kEulerGamma = 0.5772156649;
}  // namespace

double avg_path_length_c(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  const double m = static_cast<double>(n);
  const double harmonic = std::log(m - 1.0) + kEulerGamma;
  return 2.0 * harmonic - 2.0 * (m - 1.0) / m;
}

double IsolationTree::path_length(std::span<const double> x) const {
  std::uint32_t at = 0;
  while (!nodes[at].is_leaf()) {
    const Node& node = nodes[at];
    at = x[node.feature] < node.split ? node.left : node.right;
  }
  return static_cast<double>(nodes[at].depth) + avg_path_length_c(nodes[at].size);
}

std::uint32_t IsolationTree::height() const {
  std::uint32_t h = 0;
  for (const Node& n : nodes) h = std::max(h, n.depth);
  return h;
}

namespace {

IsolationTree grow_tree(const std::vector<Point>& points, std::size_t psi, std::uint32_t height_limit,
                        std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = points.size();
  const std::size_t dim = points.front().size();

  // Subsample without replacement by partial Fisher-Yates.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t k = 0; k < psi; ++k) std::swap(idx[k], idx[k + rng.below(n - k)]);
  idx.resize(psi);

  IsolationTree tree;
  struct Pending {
    std::uint32_t node;
    std::size_t begin, end;
  };
  tree.nodes.push_back({-1, 0.0, 0, 0, static_cast<std::uint32_t>(psi), 0});
  std::vector<Pending> stack{{0, 0, psi}};
  std::vector<std::size_t> candidates;
  std::vector<double> lo(dim), hi(dim);

  while (!stack.empty()) {
    const Pending job = stack.back();
    stack.pop_back();
    const std::uint32_t depth = tree.nodes[job.node].depth;
    if (job.end - job.begin <= 1 || depth >= height_limit) continue;

    std::fill(lo.begin(), lo.end(), std::numeric_limits<double>::infinity());
    std::fill(hi.begin(), hi.end(), -std::numeric_limits<double>::infinity());
    for (std::size_t k = job.begin; k < job.end; ++k) {
      const Point& p = points[idx[k]];
      for (std::size_t f = 0; f < dim; ++f) {
        lo[f] = std::min(lo[f], p[f]);
        hi[f] = std::max(hi[f], p[f]);
      }
    }
    candidates.clear();
    for (std::size_t f = 0; f < dim; ++f) {
      if (lo[f] < hi[f]) candidates.push_back(f);
    }
    if (candidates.empty()) continue;  // duplicates cannot be separated

    const std::size_t f = candidates[rng.below(candidates.size())];
    double split;
    do {
      split = rng.uniform(lo[f], hi[f]);
    } while (!(split > lo[f]));

    const auto mid = std::partition(idx.begin() + job.begin, idx.begin() + job.end,
                                     [&](std::size_t i) { return points[i][f] < split; });
    const auto cut = static_cast<std::size_t>(mid - idx.begin());

    const auto left = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.push_back({-1, 0.0, 0, 0, static_cast<std::uint32_t>(cut - job.begin), depth + 1});
    const auto right = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.push_back({-1, 0.0, 0, 0, static_cast<std::uint32_t>(job.end - cut), depth + 1});
    IsolationTree::Node& node = tree.nodes[job.node];
    node.feature = static_cast<std::int32_t>(f);
    node.split = split;
    node.left = left;
    node.right = right;
    stack.push_back({right, cut, job.end});
    stack.push_back({left, job.begin, cut});
  }
  return tree;
}

}  // namespace

double IforestModel::mean_path_length(std::span<const double> x) const {
  if (x.size() != dim) throw ShapeError("iforest: query has the wrong dimension");
  double total = 0.0;
  for (const auto& t : trees) total += t.path_length(x);
  return total / static_cast<double>(trees.size());
}

double IforestModel::score(std::span<const double> x) const {
  const double c = avg_path_length_c(psi);
  const double h = mean_path_length(x);
  if (c == 0.0) return 0.5;
  return std::exp2(-h / c);
}

IforestModel iforest_fit(const std::vector<Point>& input, const IforestOptions& options) {
  const std::size_t dim = check_points(input);
  if (options.trees == 0) throw ConfigError("iforest: tree count must be at least 1");
  if (options.psi == 0) throw ConfigError("iforest: subsample size must be positive");
  if (options.threshold_mode == ThresholdMode::kContamination &&
      !(options.contamination > 0.0 && options.contamination < 1.0)) {
    throw ConfigError("iforest: contamination must lie in (0, 1)");
  }

  const std::vector<Point> points = canonical_order(input);
  IforestModel model;
  model.dim = dim;
  model.psi = std::min(options.psi, points.size());
  const auto height_limit =
      static_cast<std::uint32_t>(std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(model.psi, 2)))));

  model.trees.resize(options.trees);
  const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, options.trees);
  auto build = [&](std::size_t first) {
    for (std::size_t t = first; t < options.trees; t += workers) {
      model.trees[t] = grow_tree(points, model.psi, height_limit, derive_seed(options.seed, t));
    }
  };
  if (workers == 1) {
    build(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(build, w);
  }

  if (options.threshold_mode == ThresholdMode::kContamination) {
    std::vector<double> scores;
    scores.reserve(points.size());
    for (const auto& p : points) scores.push_back(model.score(p));
    std::sort(scores.begin(), scores.end());
    const auto rank = static_cast<std::size_t>(
        std::floor((1.0 - options.contamination) * static_cast<double>(scores.size() - 1)));
    model.threshold = scores[rank];
  }
  return model;
}

}  // namespace miverify::odm
