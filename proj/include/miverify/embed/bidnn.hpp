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

#include <nlohmann/json.hpp>

#include "miverify/embed/embed_model.hpp"
#include "miverify/nn/layers.hpp"

namespace miverify::embed {

struct BidnnConfig {
  std::size_t hidden = 512;          // outer layers of each direction
  std::size_t representation = 256;  // central representation layer
  // Tie each direction's hidden->representation matrix to the transpose of
  // the opposite direction's representation->hidden matrix.
  bool tied = true;
  TrainConfig train;
};

nlohmann::json to_json(const BidnnConfig& c);
BidnnConfig bidnn_config_from_json(const nlohmann::json& j);

// Bidirectional network: image->caption and caption->image translators,
// each in -> hidden -> representation -> hidden -> out with ReLU hidden
// layers and a linear output, sharing their central weights.
class BidnnModel final : public EmbedModel {
 public:
  BidnnModel(std::size_t d_img, std::size_t d_cap, const BidnnConfig& config);
  BidnnModel(const nlohmann::json& header, nn::ParameterSet params);

  static BidnnModel train(const data::FeatureDataset& rd, const BidnnConfig& config,
                          const data::FeatureDataset* val = nullptr);

  ModelKind kind() const override { return ModelKind::kBidnn; }
  std::vector<double> score(const data::FeatureDataset& ds) const override;
  const nn::ParameterSet& parameters() const override { return params_; }
  nn::ParameterSet& mutable_parameters() { return params_; }
  const std::vector<double>& loss_history() const override { return history_; }
  nlohmann::json header() const override;
  const BidnnConfig& config() const { return config_; }

  // mse(img->cap, cap) + mse(cap->img, img), averaged over rows.
  double loss(const nn::Matrix& image, const nn::Matrix& caption, bool with_grad);

  // Per-row cross-modal reconstruction error (both directions summed).
  Eigen::VectorXd reconstruction_error(const nn::Matrix& image, const nn::Matrix& caption) const;

  // Concatenated central activations, image path first: [n x 2*representation].
  nn::Matrix joint_representation(const nn::Matrix& image, const nn::Matrix& caption) const;
  std::vector<double> joint_representation(const data::MediaPackage& pkg) const;

  // Weight of a layer as the forward pass sees it; layer names are
  // i2c.{0..3} and c2i.{0..3}.
  nn::Matrix effective_weight(const std::string& layer) const;

 protected:
  data::FeatureDataset wrap(const data::MediaPackage& pkg) const override;

 private:
  struct Path {
    nn::AffineLayer layers[4];
  };
  struct PathActivations {
    nn::Matrix out[4];
  };
  PathActivations run(const Path& path, const nn::Matrix& x) const;
  void backprop(const Path& path, const nn::Matrix& x, const PathActivations& a,
                const nn::Matrix& d_out);
  void wire();

  std::size_t d_img_;
  std::size_t d_cap_;
  BidnnConfig config_;
  nn::ParameterSet params_;
  std::vector<double> history_;
  Path i2c_, c2i_;
};

}  // namespace miverify::embed
