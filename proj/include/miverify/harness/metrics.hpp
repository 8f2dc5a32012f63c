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

#include <cstddef>
#include <span>

#include <nlohmann/json.hpp>

#include "miverify/datamodel.hpp"
#include "miverify/odm/common.hpp"

namespace miverify::harness {

// Tampered is the positive class: an outlier verdict predicts tampering.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const Confusion&) const = default;
};

struct F1Scores {
  double f1_tampered = 0.0;
  double f1_clean = 0.0;
  double precision_tampered = 0.0;
  double recall_tampered = 0.0;
  double precision_clean = 0.0;
  double recall_clean = 0.0;
  Confusion confusion;
};

// F1 with tampered as positive and, from the same confusion counts, with
// clean as positive. F1 is 0 when precision + recall is 0. Labels must be
// clean or tampered.
F1Scores f1_scores(std::span<const data::Label> labels, std::span<const odm::Verdict> verdicts);

F1Scores f1_from_confusion(const Confusion& c);

nlohmann::json to_json(const F1Scores& f);

}  // namespace miverify::harness
