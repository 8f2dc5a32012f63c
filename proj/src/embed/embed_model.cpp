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

#include "miverify/embed/embed_model.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "miverify/binary_io.hpp"
#include "miverify/embed/bidnn.hpp"
#include "miverify/embed/mae.hpp"
#include "miverify/embed/vsm.hpp"
#include "miverify/errors.hpp"
#include "miverify/nn/serialize.hpp"

namespace miverify::embed {

using nlohmann::json;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kMae:
      return "mae";
    case ModelKind::kBidnn:
      return "bidnn";
    case ModelKind::kVsm:
      return "vsm";
  }
  return "vsm";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "mae") return ModelKind::kMae;
  if (name == "bidnn") return ModelKind::kBidnn;
  if (name == "vsm") return ModelKind::kVsm;
  throw ConfigError("unknown model kind '" + std::string(name) + "' (expected mae|bidnn|vsm)");
}

json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.adam.lr},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"epsilon", c.adam.epsilon},
          {"seed", c.seed},
          {"patience", c.patience}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "epochs") {
      c.epochs = value.get<int>();
    } else if (key == "batch_size") {
      c.batch_size = value.get<std::size_t>();
    } else if (key == "lr") {
      c.adam.lr = value.get<double>();
    } else if (key == "beta1") {
      c.adam.beta1 = value.get<double>();
    } else if (key == "beta2") {
      c.adam.beta2 = value.get<double>();
    } else if (key == "epsilon") {
      c.adam.epsilon = value.get<double>();
    } else if (key == "seed") {
      c.seed = value.get<std::uint64_t>();
    } else if (key == "patience") {
      c.patience = value.get<int>();
    } else {
      throw ConfigError("unknown train config key '" + key + "'");
    }
  }
  if (c.epochs < 0 || c.batch_size == 0 || !(c.adam.lr > 0.0)) {
    throw ConfigError("train config needs epochs >= 0, batch_size > 0 and lr > 0");
  }
  return c;
}

IccsValue EmbedModel::iccs(const data::MediaPackage& pkg) const {
  const std::vector<double> s = score(wrap(pkg));
  return {s.front(), kind()};
}

std::vector<std::pair<std::string, IccsValue>> score_dataset(const EmbedModel& model,
                                                             const data::FeatureDataset& ds) {
  const std::vector<double> scores = model.score(ds);
  std::vector<std::pair<std::string, IccsValue>> out;
  out.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.emplace_back(ds.packages[i].package_id, IccsValue{scores[i], model.kind()});
  }
  return out;
}

std::unique_ptr<EmbedModel> train_model(ModelKind kind, const data::FeatureDataset& rd,
                                        const json& config, const data::FeatureDataset* val) {
  const json cfg = config.is_null() ? json::object() : config;
  switch (kind) {
    case ModelKind::kMae:
      return std::make_unique<MaeModel>(MaeModel::train(rd, mae_config_from_json(cfg), val));
    case ModelKind::kBidnn:
      return std::make_unique<BidnnModel>(BidnnModel::train(rd, bidnn_config_from_json(cfg), val));
    case ModelKind::kVsm:
      return std::make_unique<VsmModel>(VsmModel::train(rd, vsm_config_from_json(cfg), val));
  }
  throw ConfigError("unknown model kind");
}

void write_model(const EmbedModel& model, std::ostream& out) {
  const std::string header = model.header().dump();
  out.write(kModelMagic.data(), static_cast<std::streamsize>(kModelMagic.size()));
  binio::put<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  nn::write_parameters(model.parameters(), out);
}

std::unique_ptr<EmbedModel> read_model(std::istream& in) {
  binio::expect_magic(in, kModelMagic);
  const auto len = binio::get<std::uint64_t>(in);
  if (len > (1ull << 31)) throw FormatError(0, "model header too large");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) {
    throw FormatError(0, "truncated model header");
  }
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(0, std::string("model header is not valid JSON: ") + e.what());
  }
  nn::ParameterSet params = nn::read_parameters(in);
  switch (parse_model_kind(header.at("model_kind").get<std::string>())) {
    case ModelKind::kMae:
      return std::make_unique<MaeModel>(header, std::move(params));
    case ModelKind::kBidnn:
      return std::make_unique<BidnnModel>(header, std::move(params));
    case ModelKind::kVsm:
      return std::make_unique<VsmModel>(header, std::move(params));
  }
  throw FormatError(0, "unknown model kind");
}

void save_model(const EmbedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write model file " + path.string());
  write_model(model, out);
  if (!out) throw Error("write failed for " + path.string());
}

std::unique_ptr<EmbedModel> load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path.string());
  return read_model(in);
}

}  // namespace miverify::embed
