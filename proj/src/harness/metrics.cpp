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

#include "miverify/harness/metrics.hpp"

#include "miverify/errors.hpp"

namespace miverify::harness {

namespace {

struct PrF1 {
  double precision, recall, f1;
};

PrF1 pr_f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double r = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  return {p, r, p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0};
}

}  // namespace

F1Scores f1_from_confusion(const Confusion& c) {
  F1Scores out;
  out.confusion = c;
  const PrF1 t = pr_f1(c.tp, c.fp, c.fn);
  // With clean as positive the roles swap: TN are hits, FN false alarms.
  const PrF1 k = pr_f1(c.tn, c.fn, c.fp);
  out.precision_tampered = t.precision;
  out.recall_tampered = t.recall;
  out.f1_tampered = t.f1;
  out.precision_clean = k.precision;
  out.recall_clean = k.recall;
  out.f1_clean = k.f1;
  return out;
}

F1Scores f1_scores(std::span<const data::Label> labels, std::span<const odm::Verdict> verdicts) {
  if (labels.size() != verdicts.size()) {
    throw ValidationError("f1: labels and verdicts differ in length");
  }
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool flagged = verdicts[i] == odm::Verdict::kOutlier;
    switch (labels[i]) {
      case data::Label::kTampered:
        ++(flagged ? c.tp : c.fn);
        break;
      case data::Label::kClean:
        ++(flagged ? c.fp : c.tn);
        break;
      case data::Label::kUnknown:
        throw ValidationError("f1: ground-truth label is unknown at index " + std::to_string(i));
    }
  }
  return f1_from_confusion(c);
}

nlohmann::json to_json(const F1Scores& f) {
  return {{"f1_tampered", f.f1_tampered},
          {"f1_clean", f.f1_clean},
          {"precision_tampered", f.precision_tampered},
          {"recall_tampered", f.recall_tampered},
          {"precision_clean", f.precision_clean},
          {"recall_clean", f.recall_clean},
          {"confusion",
           {{"tp", f.confusion.tp}, {"fp", f.confusion.fp}, {"tn", f.confusion.tn}, {"fn", f.confusion.fn}}}};
}

}  // namespace miverify::harness
