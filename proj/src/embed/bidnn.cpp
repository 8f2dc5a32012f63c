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

#include "miverify/embed/bidnn.hpp"

#include "miverify/embed/mae.hpp"
#include "miverify/embed/trainer.hpp"
#include "miverify/errors.hpp"
#include "miverify/rng.hpp"

namespace miverify::embed {

using nlohmann::json;
using nn::Activation;
using nn::Matrix;

json to_json(const BidnnConfig& c) {
  return {{"hidden", c.hidden},
          {"representation", c.representation},
          {"tied", c.tied},
          {"train", to_json(c.train)}};
}

BidnnConfig bidnn_config_from_json(const json& j) {
  BidnnConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "hidden") {
      c.hidden = value.get<std::size_t>();
    } else if (key == "representation") {
      c.representation = value.get<std::size_t>();
    } else if (key == "tied") {
      c.tied = value.get<bool>();
    } else if (key == "train") {
      c.train = train_config_from_json(value, c.train);
    } else {
      throw ConfigError("bidnn: unknown config key '" + key + "'");
    }
  }
  if (c.hidden == 0 || c.representation == 0) {
    throw ConfigError("bidnn: layer widths must be positive");
  }
  return c;
}

BidnnModel::BidnnModel(std::size_t d_img, std::size_t d_cap, const BidnnConfig& config)
    : d_img_(d_img), d_cap_(d_cap), config_(config) {
  const std::size_t h = config.hidden;
  const std::size_t r = config.representation;
  const std::uint64_t seed = derive_seed(config.train.seed, "bidnn-init");
  auto add = [&](const std::string& name, std::size_t in, std::size_t out, std::uint64_t k) {
    params_.add(name + ".w", nn::xavier_uniform(in, out, derive_seed(seed, k)));
    params_.add(name + ".b", Matrix::Zero(1, out));
  };
  add("i2c.0", d_img, h, 0);
  add("i2c.2", r, h, 2);
  add("i2c.3", h, d_cap, 3);
  add("c2i.0", d_cap, h, 4);
  add("c2i.2", r, h, 6);
  add("c2i.3", h, d_img, 7);
  if (config.tied) {
    params_.alias("i2c.1.w", params_.ref("c2i.2.w"), true);
    params_.alias("c2i.1.w", params_.ref("i2c.2.w"), true);
  } else {
    params_.add("i2c.1.w", nn::xavier_uniform(h, r, derive_seed(seed, 1)));
    params_.add("c2i.1.w", nn::xavier_uniform(h, r, derive_seed(seed, 5)));
  }
  params_.add("i2c.1.b", Matrix::Zero(1, r));
  params_.add("c2i.1.b", Matrix::Zero(1, r));
  wire();
}

BidnnModel::BidnnModel(const json& header, nn::ParameterSet params)
    : d_img_(header.at("d_img").get<std::size_t>()),
      d_cap_(header.at("d_cap").get<std::size_t>()),
      config_(bidnn_config_from_json(header.at("config"))),
      params_(std::move(params)),
      history_(header.value("loss_history", std::vector<double>{})) {
  wire();
  if (params_[i2c_.layers[0].weight].value.rows() != static_cast<Eigen::Index>(d_img_) ||
      params_[c2i_.layers[0].weight].value.rows() != static_cast<Eigen::Index>(d_cap_)) {
    throw FormatError(0, "bidnn: parameter shapes disagree with header dims");
  }
}

void BidnnModel::wire() {
  const Activation acts[4] = {Activation::kRelu, Activation::kRelu, Activation::kRelu,
                              Activation::kLinear};
  for (int k = 0; k < 4; ++k) {
    const std::string a = "i2c." + std::to_string(k);
    const std::string b = "c2i." + std::to_string(k);
    i2c_.layers[k] = {params_.ref(a + ".w"), params_.ref(a + ".b"), acts[k]};
    c2i_.layers[k] = {params_.ref(b + ".w"), params_.ref(b + ".b"), acts[k]};
  }
}

BidnnModel::PathActivations BidnnModel::run(const Path& path, const Matrix& x) const {
  PathActivations a;
  a.out[0] = path.layers[0].forward(params_, x);
  for (int k = 1; k < 4; ++k) a.out[k] = path.layers[k].forward(params_, a.out[k - 1]);
  return a;
}

void BidnnModel::backprop(const Path& path, const Matrix& x, const PathActivations& a,
                          const Matrix& d_out) {
  Matrix d = d_out;
  for (int k = 3; k >= 0; --k) {
    const Matrix& in = k == 0 ? x : a.out[k - 1];
    d = path.layers[k].backward(params_, in, a.out[k], d);
  }
}

double BidnnModel::loss(const Matrix& image, const Matrix& caption, bool with_grad) {
  const PathActivations fwd = run(i2c_, image);
  const PathActivations bwd = run(c2i_, caption);
  Matrix d_cap, d_img;
  const double value = nn::mse_loss(fwd.out[3], caption, with_grad ? &d_cap : nullptr) +
                       nn::mse_loss(bwd.out[3], image, with_grad ? &d_img : nullptr);
  if (with_grad) {
    backprop(i2c_, image, fwd, d_cap);
    backprop(c2i_, caption, bwd, d_img);
  }
  return value;
}

Eigen::VectorXd BidnnModel::reconstruction_error(const Matrix& image, const Matrix& caption) const {
  const PathActivations fwd = run(i2c_, image);
  const PathActivations bwd = run(c2i_, caption);
  return nn::row_mse(fwd.out[3], caption) + nn::row_mse(bwd.out[3], image);
}

Matrix BidnnModel::joint_representation(const Matrix& image, const Matrix& caption) const {
  const Matrix a = i2c_.layers[1].forward(params_, i2c_.layers[0].forward(params_, image));
  const Matrix b = c2i_.layers[1].forward(params_, c2i_.layers[0].forward(params_, caption));
  Matrix joint(image.rows(), a.cols() + b.cols());
  joint << a, b;
  return joint;
}

std::vector<double> BidnnModel::joint_representation(const data::MediaPackage& pkg) const {
  const FeatureMatrices m = feature_matrices(wrap(pkg));
  const Matrix joint = joint_representation(m.image, m.caption);
  return {joint.data(), joint.data() + joint.size()};
}

Matrix BidnnModel::effective_weight(const std::string& layer) const {
  return params_.value(params_.ref(layer + ".w"));
}

BidnnModel BidnnModel::train(const data::FeatureDataset& rd, const BidnnConfig& config,
                             const data::FeatureDataset* val) {
  const FeatureMatrices all = feature_matrices(rd);
  BidnnModel model(rd.d_img, rd.d_cap, config);

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

std::vector<double> BidnnModel::score(const data::FeatureDataset& ds) const {
  if (ds.d_img != d_img_ || ds.d_cap != d_cap_) {
    throw ShapeError("bidnn: dataset dims do not match the model");
  }
  const FeatureMatrices m = feature_matrices(ds);
  const Eigen::VectorXd err = reconstruction_error(m.image, m.caption);
  std::vector<double> out(err.size());
  for (Eigen::Index i = 0; i < err.size(); ++i) out[i] = -err[i];
  return out;
}

json BidnnModel::header() const {
  return {{"model_kind", "bidnn"},
          {"d_img", d_img_},
          {"d_cap", d_cap_},
          {"config", to_json(config_)},
          {"loss_history", history_}};
}

data::FeatureDataset BidnnModel::wrap(const data::MediaPackage& pkg) const {
  return {"query", d_img_, d_cap_, {pkg}};
}

}  // namespace miverify::embed
