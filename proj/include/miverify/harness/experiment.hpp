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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "miverify/datamodel.hpp"
#include "miverify/embed/embed_model.hpp"
#include "miverify/harness/metrics.hpp"
#include "miverify/harness/synthetic.hpp"
#include "miverify/odm/outlier_model.hpp"

namespace miverify::harness {

inline constexpr std::string_view kReportFormat = "miverify-report/1";

// Where the packages come from. Exactly one of: a synthetic spec, a single
// dataset split with `split`, or pre-split train/val/test files (val may be
// empty).
struct DataSource {
  std::optional<SyntheticSpec> synthetic;
  std::filesystem::path dataset;
  std::filesystem::path train;
  std::filesystem::path val;
  std::filesystem::path test;
};

struct ExperimentConfig {
  DataSource data;
  data::SplitSpec split;
  double tamper_rate = 0.5;
  std::vector<embed::ModelKind> models{embed::ModelKind::kMae, embed::ModelKind::kBidnn,
                                       embed::ModelKind::kVsm};
  std::vector<odm::OdmKind> odms{odm::OdmKind::kOcsvm, odm::OdmKind::kIforest};
  // Keyed by kind name ("mae", "ocsvm", ...). Seeds left unset are derived
  // from master_seed and the kind name.
  std::map<std::string, nlohmann::json> model_configs;
  std::map<std::string, nlohmann::json> odm_configs;
  std::uint64_t master_seed = 0;
  // Models trained concurrently. Results do not depend on it.
  std::size_t threads = 1;

  void check() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
// Unknown keys are rejected. A synthetic spec without "seed" gets one derived
// from master_seed. Relative paths are resolved against `base_dir`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             const std::filesystem::path& base_dir = {});

struct CellResult {
  embed::ModelKind model;
  odm::OdmKind odm;
  F1Scores scores;
  double odm_seconds = 0.0;
};

struct ModelSummary {
  embed::ModelKind kind;
  std::size_t epochs_run = 0;
  double final_loss = 0.0;
  double mean_iccs_rd = 0.0;
  double mean_iccs_clean = 0.0;     // over clean eval packages
  double mean_iccs_tampered = 0.0;  // over tampered eval packages
  double train_seconds = 0.0;
};

struct EvaluationReport {
  nlohmann::json config;
  std::size_t rd_size = 0;
  std::size_t eval_size = 0;
  std::size_t eval_tampered = 0;
  std::vector<ModelSummary> models;
  std::vector<CellResult> cells;  // model-major, in config order
  double wall_seconds = 0.0;
};

// Timings are left out unless asked for, so equal configs give equal bytes.
nlohmann::json to_json(const EvaluationReport& r, bool include_timing = false);
// Rows are models, column pairs are ODMs: F1-tampered and F1-clean.
std::string format_table(const EvaluationReport& r);

// Train on the reference split, score it, fit each ODM on those scores,
// tamper the test split, and score every (model, odm) cell on it. Each model
// is trained once and shared by its cells. Stage errors are rethrown with
// their type and a "model=..., odm=...: " prefix.
EvaluationReport run_experiment(const ExperimentConfig& cfg);

struct OdmRanking {
  odm::OdmKind odm;
  std::vector<std::pair<embed::ModelKind, double>> ranking;  // by f1_tampered
};

// Per ODM, models by f1_tampered descending; ties go to the kind whose name
// sorts first.
std::vector<OdmRanking> compare_models(const EvaluationReport& r);
nlohmann::json to_json(const std::vector<OdmRanking>& rankings);

}  // namespace miverify::harness
