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

#include "miverify/embed/mae.hpp"

#include "miverify/embed/trainer.hpp"
#include "miverify/errors.hpp"
#include "miverify/rng.hpp"

namespace miverify::embed {

using nlohmann::json;
using nn::Activation;
using nn::Matrix;

json to_json(const MaeConfig& c) {
  return {{"hidden", c.hidden},
          {"shared", c.shared},
          {"iccs_mode", c.iccs_mode == MaeIccsMode::kSum ? "sum" : "caption_only"},
          {"train", to_json(c.train)}};
}

MaeConfig mae_config_from_json(const json& j) {
  MaeConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "hidden") {
      c.hidden = value.get<std::size_t>();
    } else if (key == "shared") {
      c.shared = value.get<std::size_t>();
    } else if (key == "iccs_mode") {
      const auto mode = value.get<std::string>();
      if (mode == "sum") {
        c.iccs_mode = MaeIccsMode::kSum;
      } else if (mode == "caption_only") {
        c.iccs_mode = MaeIccsMode::kCaptionOnly;
      } else {
        throw ConfigError("mae: unknown iccs_mode '" + mode + "'");
      }
    } else if (key == "train") {
      c.train = train_config_from_json(value, c.train);
    } else {
      throw ConfigError("mae: unknown config key '" + key + "'");
    }
  }
  if (c.hidden == 0 || c.shared == 0) throw ConfigError("mae: layer widths must be positive");
  return c;
}

FeatureMatrices feature_matrices(const data::FeatureDataset& ds) {
  const auto n = static_cast<Eigen::Index>(ds.size());
  FeatureMatrices m{Matrix(n, ds.d_img), Matrix(n, ds.d_cap)};
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& p = ds.packages[r];
    if (!p.caption_features) {
      throw ValidationError("package '" + p.package_id + "' has no caption_features");
    }
    if (p.image_features.size() != ds.d_img || p.caption_features->size() != ds.d_cap) {
      throw ShapeError("package '" + p.package_id + "' has features of the wrong length");
    }
    m.image.row(r) = Eigen::Map<const Eigen::RowVectorXd>(p.image_features.data(), ds.d_img);
    m.caption.row(r) = Eigen::Map<const Eigen::RowVectorXd>(p.caption_features->data(), ds.d_cap);
  }
  return m;
}

FeatureMatrices gather_rows(const FeatureMatrices& all, std::span<const std::size_t> rows) {
  FeatureMatrices m{Matrix(rows.size(), all.image.cols()), Matrix(rows.size(), all.caption.cols())};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    m.image.row(r) = all.image.row(rows[r]);
    m.caption.row(r) = all.caption.row(rows[r]);
  }
  return m;
}

MaeModel::MaeModel(std::size_t d_img, std::size_t d_cap, const MaeConfig& config)
    : d_img_(d_img), d_cap_(d_cap), config_(config) {
  const std::size_t h = config.hidden;
  const std::size_t s = config.shared;
  const std::uint64_t seed = derive_seed(config.train.seed, "mae-init");
  auto add = [&](const std::string& name, std::size_t in, std::size_t out, std::uint64_t k) {
    params_.add(name + ".w", nn::xavier_uniform(in, out, derive_seed(seed, k)));
    params_.add(name + ".b", Matrix::Zero(1, out));
  };
  add("enc_img", d_img, h, 0);
  add("enc_cap", d_cap, h, 1);
  add("shared", 2 * h, s, 2);
  add("dec_shared", s, 2 * h, 3);
  add("dec_img", h, d_img, 4);
  add("dec_cap", h, d_cap, 5);
  wire();
}

MaeModel::MaeModel(const json& header, nn::ParameterSet params)
    : d_img_(header.at("d_img").get<std::size_t>()),
      d_cap_(header.at("d_cap").get<std::size_t>()),
      config_(mae_config_from_json(header.at("config"))),
      params_(std::move(params)),
      history_(header.value("loss_history", std::vector<double>{})) {
  wire();
  if (params_[enc_img_.weight].value.rows() != static_cast<Eigen::Index>(d_img_) ||
      params_[dec_cap_.weight].value.cols() != static_cast<Eigen::Index>(d_cap_)) {
    throw FormatError(0, "mae: parameter shapes disagree with header dims");
  }
}

void MaeModel::wire() {
  auto layer = [&](const std::string& name, Activation act) {
    return nn::AffineLayer{params_.ref(name + ".w"), params_.ref(name + ".b"), act};
  };
  enc_img_ = layer("enc_img", Activation::kRelu);
  enc_cap_ = layer("enc_cap", Activation::kRelu);
  shared_ = layer("shared", Activation::kRelu);
  dec_shared_ = layer("dec_shared", Activation::kRelu);
  dec_img_ = layer("dec_img", Activation::kLinear);
  dec_cap_ = layer("dec_cap", Activation::kLinear);
}

MaeModel::Activations MaeModel::forward(const Matrix& image, const Matrix& caption) const {
  const auto h = static_cast<Eigen::Index>(config_.hidden);
  Activations a;
  a.h_img = enc_img_.forward(params_, image);
  a.h_cap = enc_cap_.forward(params_, caption);
  a.joint.resize(image.rows(), 2 * h);
  a.joint << a.h_img, a.h_cap;
  a.code = shared_.forward(params_, a.joint);
  a.dec_hidden = dec_shared_.forward(params_, a.code);
  a.dec_img_in = a.dec_hidden.leftCols(h);
  a.dec_cap_in = a.dec_hidden.rightCols(h);
  a.rec_img = dec_img_.forward(params_, a.dec_img_in);
  a.rec_cap = dec_cap_.forward(params_, a.dec_cap_in);
  return a;
}

MaeModel::Reconstruction MaeModel::reconstruct(const Matrix& image, const Matrix& caption) const {
  Activations a = forward(image, caption);
  return {std::move(a.rec_img), std::move(a.rec_cap)};
}

double MaeModel::loss(const Matrix& image, const Matrix& caption, bool with_grad) {
  const Activations a = forward(image, caption);
  Matrix d_img, d_cap;
  const double value = nn::mse_loss(a.rec_img, image, with_grad ? &d_img : nullptr) +
                       nn::mse_loss(a.rec_cap, caption, with_grad ? &d_cap : nullptr);
  if (!with_grad) return value;

  const auto h = static_cast<Eigen::Index>(config_.hidden);
  Matrix d_dec_hidden(image.rows(), 2 * h);
  d_dec_hidden.leftCols(h) = dec_img_.backward(params_, a.dec_img_in, a.rec_img, d_img);
  d_dec_hidden.rightCols(h) = dec_cap_.backward(params_, a.dec_cap_in, a.rec_cap, d_cap);
  const Matrix d_code = dec_shared_.backward(params_, a.code, a.dec_hidden, d_dec_hidden);
  const Matrix d_joint = shared_.backward(params_, a.joint, a.code, d_code);
  enc_img_.backward(params_, image, a.h_img, d_joint.leftCols(h));
  enc_cap_.backward(params_, caption, a.h_cap, d_joint.rightCols(h));
  return value;
}

Eigen::VectorXd MaeModel::reconstruction_error(const Matrix& image, const Matrix& caption) const {
  const Activations a = forward(image, caption);
  Eigen::VectorXd err = nn::row_mse(a.rec_cap, caption);
  if (config_.iccs_mode == MaeIccsMode::kSum) err += nn::row_mse(a.rec_img, image);
  return err;
}

MaeModel MaeModel::train(const data::FeatureDataset& rd, const MaeConfig& config,
                         const data::FeatureDataset* val) {
  const FeatureMatrices all = feature_matrices(rd);
  MaeModel model(rd.d_img, rd.d_cap, config);

  ValidationLoss val_loss;
  FeatureMatrices val_m;
  if (val && !val->empty()) {
    val_m = feature_matrices(*val);
    val_loss = [&] { return model.loss(val_m.image, val_m.caption, false); };
  }
  model.history_ = run_training(
      model.params_, rd.size(), config.train, 1,
      [&](std::span<const std::size_t> batch, bool grad) {
        const FeatureMatrices b = gather_rows(all, batch);
        return model.loss(b.image, b.caption, grad);
      },
      val_loss);
  return model;
}

std::vector<double> MaeModel::score(const data::FeatureDataset& ds) const {
  if (ds.d_img != d_img_ || ds.d_cap != d_cap_) {
    throw ShapeError("mae: dataset dims do not match the model");
  }
  const FeatureMatrices m = feature_matrices(ds);
  const Eigen::VectorXd err = reconstruction_error(m.image, m.caption);
  std::vector<double> out(err.size());
  for (Eigen::Index i = 0; i < err.size(); ++i) out[i] = -err[i];
  return out;
}

json MaeModel::header() const {
  return {{"model_kind", "mae"},
          {"d_img", d_img_},
          {"d_cap", d_cap_},
          {"config", to_json(config_)},
          {"loss_history", history_}};
}

data::FeatureDataset MaeModel::wrap(const data::MediaPackage& pkg) const {
  return {"query", d_img_, d_cap_, {pkg}};
}

}  // namespace miverify::embed
