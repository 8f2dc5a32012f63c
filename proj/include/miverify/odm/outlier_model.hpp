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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "miverify/embed/embed_model.hpp"
#include "miverify/odm/iforest.hpp"
#include "miverify/odm/ocsvm.hpp"

namespace miverify::odm {

enum class OdmKind { kOcsvm, kIforest };

std::string_view to_string(OdmKind kind);
OdmKind parse_odm_kind(std::string_view name);

struct OdmConfig {
  OdmKind kind = OdmKind::kOcsvm;
  // One-class SVM. gamma <= 0 means 1 / (2 var(scores)), variance floored at 1e-12.
  double nu = 0.1;
  double gamma = 0.0;
  double tol = 1e-6;
  // Isolation forest.
  std::size_t trees = 100;
  std::size_t psi = 256;
  ThresholdMode threshold_mode = ThresholdMode::kAuto;
  double contamination = 0.1;
  std::size_t threads = 1;
  std::uint64_t seed = 0;
  // z-normalize scores with the reference mean and standard deviation.
  bool standardize = false;
};

nlohmann::json to_json(const OdmConfig& c);
// Keys of `j` override `base`; "kind" is accepted but optional.
OdmConfig odm_config_from_json(const nlohmann::json& j, OdmConfig base = {});

struct OdmPrediction {
  double value;  // OCSVM decision value or iForest anomaly score
  Verdict verdict;
};

// A detector fitted on reference ICCS values. Immutable after fitting.
class OutlierModel {
 public:
  OutlierModel(OdmConfig config, std::variant<OcsvmModel, IforestModel> model, double shift,
               double scale);

  OdmKind kind() const { return config_.kind; }
  const OdmConfig& config() const { return config_; }
  const std::variant<OcsvmModel, IforestModel>& model() const { return model_; }

  OdmPrediction predict(std::span<const double> x) const;
  OdmPrediction predict(double score) const { return predict(std::span<const double>(&score, 1)); }
  std::vector<OdmPrediction> predict_all(const std::vector<double>& scores) const;

  double shift() const { return shift_; }
  double scale() const { return scale_; }

 private:
  OdmConfig config_;
  std::variant<OcsvmModel, IforestModel> model_;
  double shift_ = 0.0;  // applied as (x - shift) / scale before the detector
  double scale_ = 1.0;
};

OutlierModel odm_fit(const std::vector<Point>& points, const OdmConfig& config);
OutlierModel odm_fit_on_scores(const std::vector<double>& scores, const OdmConfig& config);
OutlierModel odm_fit_on_scores(const std::vector<embed::IccsValue>& scores, const OdmConfig& config);

inline constexpr std::string_view kOdmMagic = "MIVODM1";

// "MIVODM1", u64 header length, JSON header (kind, hyperparameters,
// threshold, standardization, array sizes), then little-endian arrays:
//   OCSVM   n_sv * dim f64 support vectors, n_sv f64 alphas
//   iForest per tree: u64 node count, then per node
//           i32 feature, f64 split, u32 left, u32 right, u32 size, u32 depth
void write_odm(const OutlierModel& model, std::ostream& out);
OutlierModel read_odm(std::istream& in);
void save_odm(const OutlierModel& model, const std::filesystem::path& path);
OutlierModel load_odm(const std::filesystem::path& path);

}  // namespace miverify::odm
