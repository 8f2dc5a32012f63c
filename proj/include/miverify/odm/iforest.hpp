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

// Expected path length of an unsuccessful BST search over n points; the
// normalizer of the isolation-forest anomaly score. c(0) = c(1) = 0, c(2) = 1.
double avg_path_length_c(std::size_t n);

struct IsolationTree {
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double split = 0.0;         // left: x[feature] < split
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t size = 0;  // subsample points reaching the node
    std::uint32_t depth = 0;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const Node&) const = default;
  };

  std::vector<Node> nodes;  // nodes[0] is the root

  // Edges from the root to x's leaf plus c(leaf size).
  double path_length(std::span<const double> x) const;
  std::uint32_t height() const;

  bool operator==(const IsolationTree&) const = default;
};

enum class ThresholdMode { kAuto, kContamination };

struct IforestOptions {
  std::size_t trees = 100;
  std::size_t psi = 256;  // subsample size, capped at n
  std::uint64_t seed = 0;
  // kAuto flags scores above 0.5; kContamination puts the threshold at the
  // (1 - contamination) quantile of the training scores.
  ThresholdMode threshold_mode = ThresholdMode::kAuto;
  double contamination = 0.1;
  std::size_t threads = 1;
};

struct IforestModel {
  std::size_t dim = 0;
  std::size_t psi = 0;
  double threshold = 0.5;
  std::vector<IsolationTree> trees;

  double mean_path_length(std::span<const double> x) const;
  // 2^(-E[h(x)] / c(psi)), in (0, 1]; larger is more anomalous.
  double score(std::span<const double> x) const;
  Verdict predict(std::span<const double> x) const {
    return score(x) > threshold ? Verdict::kOutlier : Verdict::kInlier;
  }

  bool operator==(const IforestModel&) const = default;
};

// Each tree draws its subsample and splits from an RNG seeded by
// (seed, tree index), so the forest is identical for any thread count.
IforestModel iforest_fit(const std::vector<Point>& points, const IforestOptions& options);

}  // namespace miverify::odm
