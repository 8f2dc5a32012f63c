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

#include "miverify/embed/vsm.hpp"

#include <algorithm>

#include "miverify/embed/trainer.hpp"
#include "miverify/errors.hpp"
#include "miverify/rng.hpp"

namespace miverify::embed {

using nlohmann::json;
using nn::Activation;
using nn::Matrix;

json to_json(const VsmConfig& c) {
  return {{"word_dim", c.word_dim}, {"hidden", c.hidden},       {"embed_dim", c.embed_dim},
          {"margin", c.margin},     {"min_count", c.min_count}, {"train", to_json(c.train)}};
}

VsmConfig vsm_config_from_json(const json& j) {
  VsmConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "word_dim") {
      c.word_dim = value.get<std::size_t>();
    } else if (key == "hidden") {
      c.hidden = value.get<std::size_t>();
    } else if (key == "embed_dim") {
      c.embed_dim = value.get<std::size_t>();
    } else if (key == "margin") {
      c.margin = value.get<double>();
    } else if (key == "min_count") {
      c.min_count = value.get<std::size_t>();
    } else if (key == "train") {
      c.train = train_config_from_json(value, c.train);
    } else {
      throw ConfigError("vsm: unknown config key '" + key + "'");
    }
  }
  if (c.word_dim == 0 || c.hidden == 0 || c.embed_dim == 0) {
    throw ConfigError("vsm: layer widths must be positive");
  }
  if (!(c.margin > 0.0)) throw ConfigError("vsm: margin must be positive");
  return c;
}

std::vector<double> row_cosines(const Matrix& a, const Matrix& b) {
  std::vector<double> out(a.rows());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    out[r] = std::clamp(a.row(r).dot(b.row(r)), -1.0, 1.0);
  }
  return out;
}

VsmModel::VsmModel(Vocabulary vocab, std::size_t d_img, const VsmConfig& config)
    : vocab_(std::move(vocab)), d_img_(d_img), config_(config) {
  const std::size_t e = config.word_dim;
  const std::size_t h = config.hidden;
  const std::size_t d = config.embed_dim;
  const std::uint64_t seed = derive_seed(config.train.seed, "vsm-init");

  params_.add("embed", nn::xavier_uniform(vocab_.size(), e, derive_seed(seed, 0)));
  params_.add("lstm.wx", nn::xavier_uniform(e, 4 * h, derive_seed(seed, 1)));
  params_.add("lstm.wh", nn::xavier_uniform(h, 4 * h, derive_seed(seed, 2)));
  Matrix bias = Matrix::Zero(1, 4 * h);
  bias.middleCols(h, h).setOnes();  // forget-gate bias starts at 1
  params_.add("lstm.b", std::move(bias));
  params_.add("caption_proj.w", nn::xavier_uniform(h, d, derive_seed(seed, 3)));
  params_.add("caption_proj.b", Matrix::Zero(1, d));
  params_.add("image_proj.w", nn::xavier_uniform(d_img, d, derive_seed(seed, 4)));
  params_.add("image_proj.b", Matrix::Zero(1, d));
  wire();
}

VsmModel::VsmModel(const json& header, nn::ParameterSet params)
    : vocab_(Vocabulary::from_json(header.at("vocabulary"))),
      d_img_(header.at("d_img").get<std::size_t>()),
      d_cap_(header.value("d_cap", std::size_t{1})),
      config_(vsm_config_from_json(header.at("config"))),
      params_(std::move(params)),
      history_(header.value("loss_history", std::vector<double>{})) {
  wire();
  if (params_[embed_].value.rows() != static_cast<Eigen::Index>(vocab_.size()) ||
      params_[image_proj_.weight].value.rows() != static_cast<Eigen::Index>(d_img_)) {
    throw FormatError(0, "vsm: parameter shapes disagree with header");
  }
}

void VsmModel::wire() {
  embed_ = params_.ref("embed");
  lstm_wx_ = params_.ref("lstm.wx");
  lstm_wh_ = params_.ref("lstm.wh");
  lstm_b_ = params_.ref("lstm.b");
  caption_proj_ = {params_.ref("caption_proj.w"), params_.ref("caption_proj.b"), Activation::kLinear};
  image_proj_ = {params_.ref("image_proj.w"), params_.ref("image_proj.b"), Activation::kLinear};
}

VsmModel::CaptionBatch VsmModel::gather_tokens(const std::vector<std::vector<int>>& captions) const {
  const Matrix& embed = params_[embed_].value;
  std::size_t steps = 0;
  bool ragged = false;
  for (const auto& c : captions) {
    if (c.empty()) throw ShapeError("vsm: encoded caption must have at least one token");
    if (steps && c.size() != steps) ragged = true;
    steps = std::max(steps, c.size());
  }
  const auto batch = static_cast<Eigen::Index>(captions.size());
  CaptionBatch out;
  out.inputs.assign(steps, Matrix::Zero(batch, embed.cols()));
  if (ragged) out.masks.assign(steps, Eigen::VectorXd::Zero(batch));
  for (Eigen::Index r = 0; r < batch; ++r) {
    const auto& c = captions[r];
    for (std::size_t t = 0; t < c.size(); ++t) {
      const int tok = c[t] >= 0 && static_cast<std::size_t>(c[t]) < vocab_.size() ? c[t]
                                                                                   : Vocabulary::kUnk;
      out.inputs[t].row(r) = embed.row(tok);
      if (ragged) out.masks[t][r] = 1.0;
    }
  }
  return out;
}

Matrix VsmModel::embed_images(const Matrix& images) const {
  Eigen::VectorXd norms;
  return nn::normalize_rows(image_proj_.forward(params_, images), norms);
}

Matrix VsmModel::embed_captions(const std::vector<std::vector<int>>& captions) const {
  const CaptionBatch tokens = gather_tokens(captions);
  const Matrix h = nn::lstm_batch_forward(tokens.inputs, tokens.masks, params_[lstm_wx_].value,
                                          params_[lstm_wh_].value, params_[lstm_b_].value, nullptr);
  Eigen::VectorXd norms;
  return nn::normalize_rows(caption_proj_.forward(params_, h), norms);
}

double VsmModel::loss(const Matrix& images, const std::vector<std::vector<int>>& captions,
                      bool with_grad) {
  const auto batch = images.rows();
  if (batch != static_cast<Eigen::Index>(captions.size())) throw ShapeError("vsm: batch mismatch");

  const Matrix img_proj = image_proj_.forward(params_, images);
  Eigen::VectorXd img_norms;
  const Matrix u_img = nn::normalize_rows(img_proj, img_norms);

  const CaptionBatch tokens = gather_tokens(captions);
  nn::LstmCache cache;
  const Matrix h = nn::lstm_batch_forward(tokens.inputs, tokens.masks, params_[lstm_wx_].value,
                                          params_[lstm_wh_].value, params_[lstm_b_].value,
                                          with_grad ? &cache : nullptr);
  const Matrix cap_proj = caption_proj_.forward(params_, h);
  Eigen::VectorXd cap_norms;
  const Matrix u_cap = nn::normalize_rows(cap_proj, cap_norms);

  // scores(i, j) = s(image i, caption j)
  const Matrix scores = u_img * u_cap.transpose();
  const double margin = config_.margin;
  const double scale = 1.0 / static_cast<double>(batch);
  Matrix d_scores = Matrix::Zero(batch, batch);
  double total = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const double pos = scores(i, i);
    for (Eigen::Index j = 0; j < batch; ++j) {
      if (j == i) continue;
      // contrastive caption for image i
      const double a = nn::hinge_rank_loss(pos, scores(i, j), margin);
      if (a > 0.0) {
        total += a;
        d_scores(i, j) += scale;
        d_scores(i, i) -= scale;
      }
      // contrastive image for caption i
      const double b = nn::hinge_rank_loss(pos, scores(j, i), margin);
      if (b > 0.0) {
        total += b;
        d_scores(j, i) += scale;
        d_scores(i, i) -= scale;
      }
    }
  }
  const double value = total * scale;
  if (!with_grad) return value;

  const Matrix d_u_img = d_scores * u_cap;
  const Matrix d_u_cap = d_scores.transpose() * u_img;
  image_proj_.backward(params_, images, img_proj, nn::normalize_rows_backward(d_u_img, u_img, img_norms));
  const Matrix d_h = caption_proj_.backward(params_, h, cap_proj,
                                            nn::normalize_rows_backward(d_u_cap, u_cap, cap_norms));

  const std::vector<Matrix> d_inputs = nn::lstm_batch_backward(
      cache, d_h, params_[lstm_wx_].value, params_[lstm_wh_].value, params_[lstm_wx_].grad,
      params_[lstm_wh_].grad, params_[lstm_b_].grad);
  Matrix& d_embed = params_[embed_].grad;
  for (Eigen::Index r = 0; r < batch; ++r) {
    const auto& c = captions[r];
    for (std::size_t t = 0; t < c.size(); ++t) {
      const int tok = c[t] >= 0 && static_cast<std::size_t>(c[t]) < vocab_.size() ? c[t]
                                                                                   : Vocabulary::kUnk;
      d_embed.row(tok) += d_inputs[t].row(r);
    }
  }
  return value;
}

namespace {

Matrix image_matrix(const data::FeatureDataset& ds, std::span<const std::size_t> rows) {
  Matrix m(rows.size(), ds.d_img);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = ds.packages[rows[r]].image_features;
    if (f.size() != ds.d_img) throw ShapeError("vsm: image feature length mismatch");
    m.row(r) = Eigen::Map<const Eigen::RowVectorXd>(f.data(), ds.d_img);
  }
  return m;
}

std::vector<std::vector<int>> encode_rows(const Vocabulary& vocab, const data::FeatureDataset& ds,
                                          std::span<const std::size_t> rows) {
  std::vector<std::vector<int>> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(vocab.encode(ds.packages[r].caption_text));
  return out;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

}  // namespace

VsmModel VsmModel::train(const data::FeatureDataset& rd, const VsmConfig& config,
                         const data::FeatureDataset* val) {
  VsmModel model(build_vocab(rd, config.min_count), rd.d_img, config);
  model.d_cap_ = rd.d_cap;
  if (rd.size() < 2) throw ValidationError("vsm: training needs at least 2 packages");

  const auto all_rows = iota_rows(rd.size());
  const Matrix images = image_matrix(rd, all_rows);
  const auto captions = encode_rows(model.vocab_, rd, all_rows);

  ValidationLoss val_loss;
  Matrix val_images;
  std::vector<std::vector<int>> val_captions;
  if (val && val->size() >= 2) {
    const auto rows = iota_rows(val->size());
    val_images = image_matrix(*val, rows);
    val_captions = encode_rows(model.vocab_, *val, rows);
    val_loss = [&] {
      double total = 0.0;
      std::size_t seen = 0;
      const std::size_t bs = std::max<std::size_t>(2, config.train.batch_size);
      for (std::size_t s = 0; s + 2 <= val_captions.size(); s += bs) {
        const std::size_t len = std::min(bs, val_captions.size() - s);
        if (len < 2) break;
        std::vector<std::vector<int>> caps(val_captions.begin() + s, val_captions.begin() + s + len);
        total += model.loss(val_images.middleRows(s, len), caps, false) * static_cast<double>(len);
        seen += len;
      }
      return total / static_cast<double>(seen);
    };
  }

  model.history_ = run_training(
      model.params_, rd.size(), config.train, 2,
      [&](std::span<const std::size_t> batch, bool grad) {
        Matrix b_images(batch.size(), images.cols());
        std::vector<std::vector<int>> b_caps;
        b_caps.reserve(batch.size());
        for (std::size_t r = 0; r < batch.size(); ++r) {
          b_images.row(r) = images.row(batch[r]);
          b_caps.push_back(captions[batch[r]]);
        }
        return model.loss(b_images, b_caps, grad);
      },
      val_loss);
  return model;
}

std::vector<double> VsmModel::score(const data::FeatureDataset& ds) const {
  if (ds.d_img != d_img_) throw ShapeError("vsm: dataset d_img does not match the model");
  std::vector<double> out;
  out.reserve(ds.size());
  constexpr std::size_t kChunk = 256;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < ds.size(); start += kChunk) {
    rows.clear();
    for (std::size_t i = start; i < std::min(ds.size(), start + kChunk); ++i) rows.push_back(i);
    const Matrix u_img = embed_images(image_matrix(ds, rows));
    const Matrix u_cap = embed_captions(encode_rows(vocab_, ds, rows));
    for (double s : row_cosines(u_img, u_cap)) out.push_back(s);
  }
  return out;
}

json VsmModel::header() const {
  return {{"model_kind", "vsm"},        {"d_img", d_img_},
          {"d_cap", d_cap_},            {"margin", config_.margin},
          {"config", to_json(config_)}, {"vocabulary", vocab_.to_json()},
          {"loss_history", history_}};
}

data::FeatureDataset VsmModel::wrap(const data::MediaPackage& pkg) const {
  return {"query", d_img_, d_cap_, {pkg}};
}

}  // namespace miverify::embed
