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

#include <span>

#include <nlohmann/json.hpp>

#include "miverify/embed/embed_model.hpp"
#include "miverify/nn/layers.hpp"

namespace miverify::embed {

enum class MaeIccsMode { kSum, kCaptionOnly };

struct MaeConfig {
  std::size_t hidden = 512;  // width of each unimodal layer
  std::size_t shared = 256;  // width of the shared representation
  // Which reconstruction errors make up the ICCS. Training always minimizes
  // the sum over both modalities.
  MaeIccsMode iccs_mode = MaeIccsMode::kSum;
  TrainConfig train;
};

nlohmann::json to_json(const MaeConfig& c);
MaeConfig mae_config_from_json(const nlohmann::json& j);

// Multimodal autoencoder. Each modality passes through its own ReLU layer,
// the two are concatenated into a shared ReLU code, and a mirrored decoder
// expands the code back and splits it into linear image and caption heads.
class MaeModel final : public EmbedModel {
 public:
  MaeModel(std::size_t d_img, std::size_t d_cap, const MaeConfig& config);
  MaeModel(const nlohmann::json& header, nn::ParameterSet params);

  static MaeModel train(const data::FeatureDataset& rd, const MaeConfig& config,
                        const data::FeatureDataset* val = nullptr);

  ModelKind kind() const override { return ModelKind::kMae; }
  std::vector<double> score(const data::FeatureDataset& ds) const override;
  const nn::ParameterSet& parameters() const override { return params_; }
  nn::ParameterSet& mutable_parameters() { return params_; }
  const std::vector<double>& loss_history() const override { return history_; }
  nlohmann::json header() const override;
  const MaeConfig& config() const { return config_; }

  struct Reconstruction {
    nn::Matrix image;
    nn::Matrix caption;
  };
  Reconstruction reconstruct(const nn::Matrix& image, const nn::Matrix& caption) const;

  // Mean training objective mse(img) + mse(cap) over the rows; accumulates
  // gradients into the parameter buffers when `with_grad` is set.
  double loss(const nn::Matrix& image, const nn::Matrix& caption, bool with_grad);

  // Per-row reconstruction error per the configured ICCS mode.
  Eigen::VectorXd reconstruction_error(const nn::Matrix& image, const nn::Matrix& caption) const;

 protected:
  data::FeatureDataset wrap(const data::MediaPackage& pkg) const override;

 private:
  struct Activations {
    nn::Matrix h_img, h_cap, joint, code, dec_hidden, dec_img_in, dec_cap_in, rec_img, rec_cap;
  };
  Activations forward(const nn::Matrix& image, const nn::Matrix& caption) const;
  void wire();

  std::size_t d_img_;
  std::size_t d_cap_;
  MaeConfig config_;
  nn::ParameterSet params_;
  std::vector<double> history_;
  nn::AffineLayer enc_img_, enc_cap_, shared_, dec_shared_, dec_img_, dec_cap_;
};

// Stacks image and caption features into row matrices; throws
// ValidationError if any package lacks caption features.
struct FeatureMatrices {
  nn::Matrix image;
  nn::Matrix caption;
};
FeatureMatrices feature_matrices(const data::FeatureDataset& ds);
FeatureMatrices gather_rows(const FeatureMatrices& all, std::span<const std::size_t> rows);

}  // namespace miverify::embed
