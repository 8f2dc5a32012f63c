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

#include <nlohmann/json.hpp>

#include "miverify/datamodel.hpp"
#include "miverify/nn/parameters.hpp"

namespace miverify::harness {

// Desk-scale stand-in for a real image-caption corpus. Every image has a
// latent z ~ N(0, I_k); image features are A z + noise, caption features
// B z + noise, and the caption text names the quantile bin of each latent
// coordinate ("z3q1" = coordinate 3 falls in bin 1), so text and features
// are consistent exactly when they share z.
struct SyntheticSpec {
  std::size_t latent_dim = 8;
  std::size_t d_img = 64;
  std::size_t d_cap = 32;
  double noise = 0.05;
  std::size_t n_train = 2000;
  std::size_t n_val = 200;
  std::size_t n_test = 400;
  std::size_t bins = 4;  // quantization levels per latent coordinate
  std::size_t captions_per_image = 1;
  std::uint64_t seed = 0;

  void check() const;
};

nlohmann::json to_json(const SyntheticSpec& s);
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j, SyntheticSpec base = {});

struct SyntheticData {
  data::Splits splits;
  nn::Matrix image_mixing;    // d_img x k
  nn::Matrix caption_mixing;  // d_cap x k
};

// Sizes count images; each image contributes captions_per_image packages.
SyntheticData make_synthetic(const SyntheticSpec& spec);

}  // namespace miverify::harness
