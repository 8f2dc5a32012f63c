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
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "miverify/embed/embed_model.hpp"
#include "miverify/embed/vocab.hpp"
#include "miverify/nn/layers.hpp"
#include "miverify/nn/lstm.hpp"

namespace miverify::embed {

struct VsmConfig {
  std::size_t word_dim = 300;   // word embedding width
  std::size_t hidden = 300;     // LSTM state width
  std::size_t embed_dim = 300;  // joint embedding width
  double margin = 0.2;
  std::size_t min_count = 1;
  TrainConfig train;
};

nlohmann::json to_json(const VsmConfig& c);
VsmConfig vsm_config_from_json(const nlohmann::json& j);

// Visual-semantic embedding: captions go through word embeddings and an LSTM
// whose final state is projected into the joint space; image features get a
// linear projection into the same space. Both sides are L2-normalized and the
// ICCS is their cosine. Trained with a bidirectional hinge ranking loss over
// in-batch negatives.
class VsmModel final : public EmbedModel {
 public:
  VsmModel(Vocabulary vocab, std::size_t d_img, const VsmConfig& config);
  VsmModel(const nlohmann::json& header, nn::ParameterSet params);

  static VsmModel train(const data::FeatureDataset& rd, const VsmConfig& config,
                        const data::FeatureDataset* val = nullptr);

  ModelKind kind() const override { return ModelKind::kVsm; }
  std::vector<double> score(const data::FeatureDataset& ds) const override;
  const nn::ParameterSet& parameters() const override { return params_; }
  nn::ParameterSet& mutable_parameters() { return params_; }
  const std::vector<double>& loss_history() const override { return history_; }
  nlohmann::json header() const override;
  const VsmConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocab_; }

  // Unit-norm joint-space embeddings, one row per input.
  nn::Matrix embed_images(const nn::Matrix& images) const;
  nn::Matrix embed_captions(const std::vector<std::vector<int>>& captions) const;

  // Summed hinge losses over in-batch negatives divided by the batch size.
  double loss(const nn::Matrix& images, const std::vector<std::vector<int>>& captions,
              bool with_grad);

 protected:
  data::FeatureDataset wrap(const data::MediaPackage& pkg) const override;

 private:
  struct CaptionBatch {
    std::vector<nn::Matrix> inputs;
    std::vector<Eigen::VectorXd> masks;
  };
  CaptionBatch gather_tokens(const std::vector<std::vector<int>>& captions) const;
  void wire();

  Vocabulary vocab_;
  std::size_t d_img_;
  std::size_t d_cap_ = 1;  // echoed for dataset dims only; captions are read as text
  VsmConfig config_;
  nn::ParameterSet params_;
  std::vector<double> history_;
  nn::ParamRef embed_, lstm_wx_, lstm_wh_, lstm_b_;
  nn::AffineLayer caption_proj_, image_proj_;
};

// Clamped dot products of matching rows of two unit-norm matrices.
std::vector<double> row_cosines(const nn::Matrix& a, const nn::Matrix& b);

}  // namespace miverify::embed
