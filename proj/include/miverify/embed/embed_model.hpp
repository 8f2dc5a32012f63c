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
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "miverify/datamodel.hpp"
#include "miverify/nn/parameters.hpp"

namespace miverify::embed {

enum class ModelKind { kMae, kBidnn, kVsm };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

// Image-caption consistency score. Larger means more consistent for every
// model kind; VSM values lie in [-1, 1].
struct IccsValue {
  double value = 0.0;
  ModelKind kind = ModelKind::kVsm;
};

struct TrainConfig {
  int epochs = 50;
  std::size_t batch_size = 64;
  nn::AdamConfig adam;
  std::uint64_t seed = 0;
  // Early stopping on the validation loss; 0 disables it.
  int patience = 0;
};

nlohmann::json to_json(const TrainConfig& c);
// Reads known keys over defaults and rejects unknown ones.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

// A trained deep multimodal representation model. Trained models are
// immutable; scoring is const and safe to call concurrently.
class EmbedModel {
 public:
  virtual ~EmbedModel() = default;

  virtual ModelKind kind() const = 0;

  // ICCS for every package of `ds`, in dataset order.
  virtual std::vector<double> score(const data::FeatureDataset& ds) const = 0;

  IccsValue iccs(const data::MediaPackage& pkg) const;

  virtual const nn::ParameterSet& parameters() const = 0;
  virtual const std::vector<double>& loss_history() const = 0;

  // Everything needed to rebuild the model around its parameter block.
  virtual nlohmann::json header() const = 0;

 protected:
  // Single-package dataset carrying the model's own dimensions.
  virtual data::FeatureDataset wrap(const data::MediaPackage& pkg) const = 0;
};

std::vector<std::pair<std::string, IccsValue>> score_dataset(const EmbedModel& model,
                                                             const data::FeatureDataset& ds);

// Trains the requested kind on `rd`. `config` holds the model-specific keys
// (see each model's *_config_from_json); `val`, when given, drives early
// stopping.
std::unique_ptr<EmbedModel> train_model(ModelKind kind, const data::FeatureDataset& rd,
                                        const nlohmann::json& config,
                                        const data::FeatureDataset* val = nullptr);

inline constexpr std::string_view kModelMagic = "MIVEMB1";

// "MIVEMB1", u64 header length, JSON header, then the MIVNN1 parameter block.
void write_model(const EmbedModel& model, std::ostream& out);
std::unique_ptr<EmbedModel> read_model(std::istream& in);
void save_model(const EmbedModel& model, const std::filesystem::path& path);
std::unique_ptr<EmbedModel> load_model(const std::filesystem::path& path);

}  // namespace miverify::embed
