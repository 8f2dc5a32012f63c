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

#include "miverify/odm/outlier_model.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "miverify/binary_io.hpp"
#include "miverify/errors.hpp"

namespace miverify::odm {

using nlohmann::json;

std::string_view to_string(OdmKind kind) { return kind == OdmKind::kOcsvm ? "ocsvm" : "iforest"; }

OdmKind parse_odm_kind(std::string_view name) {
  if (name == "ocsvm") return OdmKind::kOcsvm;
  if (name == "iforest") return OdmKind::kIforest;
  throw ConfigError("unknown odm kind '" + std::string(name) + "' (expected ocsvm|iforest)");
}

json to_json(const OdmConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"nu", c.nu},
          {"gamma", c.gamma},
          {"tol", c.tol},
          {"trees", c.trees},
          {"psi", c.psi},
          {"threshold_mode", c.threshold_mode == ThresholdMode::kAuto ? "auto" : "contamination"},
          {"contamination", c.contamination},
          {"threads", c.threads},
          {"seed", c.seed},
          {"standardize", c.standardize}};
}

OdmConfig odm_config_from_json(const json& j, OdmConfig c) {
  if (j.is_null()) return c;
  if (!j.is_object()) throw ConfigError("odm config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") {
      c.kind = parse_odm_kind(value.get<std::string>());
    } else if (key == "nu") {
      c.nu = value.get<double>();
    } else if (key == "gamma") {
      c.gamma = value.get<double>();
    } else if (key == "tol") {
      c.tol = value.get<double>();
    } else if (key == "trees") {
      c.trees = value.get<std::size_t>();
    } else if (key == "psi") {
      c.psi = value.get<std::size_t>();
    } else if (key == "threshold_mode") {
      const auto mode = value.get<std::string>();
      if (mode == "auto") {
        c.threshold_mode = ThresholdMode::kAuto;
      } else if (mode == "contamination") {
        c.threshold_mode = ThresholdMode::kContamination;
      } else {
        throw ConfigError("unknown threshold_mode '" + mode + "'");
      }
    } else if (key == "contamination") {
      c.contamination = value.get<double>();
    } else if (key == "threads") {
      c.threads = value.get<std::size_t>();
    } else if (key == "seed") {
      c.seed = value.get<std::uint64_t>();
    } else if (key == "standardize") {
      c.standardize = value.get<bool>();
    } else {
      throw ConfigError("unknown odm config key '" + key + "'");
    }
  }
  return c;
}

OutlierModel::OutlierModel(OdmConfig config, std::variant<OcsvmModel, IforestModel> model,
                           double shift, double scale)
    : config_(std::move(config)), model_(std::move(model)), shift_(shift), scale_(scale) {}

OdmPrediction OutlierModel::predict(std::span<const double> x) const {
  Point z(x.begin(), x.end());
  for (double& v : z) v = (v - shift_) / scale_;
  if (const auto* svm = std::get_if<OcsvmModel>(&model_)) {
    const double d = svm->decision(z);
    return {d, d >= 0.0 ? Verdict::kInlier : Verdict::kOutlier};
  }
  const auto& forest = std::get<IforestModel>(model_);
  const double s = forest.score(z);
  return {s, s > forest.threshold ? Verdict::kOutlier : Verdict::kInlier};
}

std::vector<OdmPrediction> OutlierModel::predict_all(const std::vector<double>& scores) const {
  std::vector<OdmPrediction> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(predict(s));
  return out;
}

namespace {

// Per-coordinate mean and population variance.
std::pair<Point, Point> moments(const std::vector<Point>& points) {
  const std::size_t dim = points.front().size();
  Point mean(dim, 0.0), var(dim, 0.0);
  for (const auto& p : points) {
    for (std::size_t k = 0; k < dim; ++k) mean[k] += p[k];
  }
  for (double& m : mean) m /= static_cast<double>(points.size());
  for (const auto& p : points) {
    for (std::size_t k = 0; k < dim; ++k) var[k] += (p[k] - mean[k]) * (p[k] - mean[k]);
  }
  for (double& v : var) v /= static_cast<double>(points.size());
  return {mean, var};
}

}  // namespace

OutlierModel odm_fit(const std::vector<Point>& input, const OdmConfig& config) {
  const std::size_t dim = check_points(input);
  // Moments are summed in canonical order so that gamma and the scaling do
  // not depend on the input order at the last bit either.
  std::vector<Point> points = canonical_order(input);

  // Standardization applies one shift/scale to every coordinate, which is
  // exact for the scalar ICCS this is designed around.
  double shift = 0.0, scale = 1.0;
  if (config.standardize) {
    if (dim != 1) throw ConfigError("standardize is only supported for scalar scores");
    auto [mean, var] = moments(points);
    shift = mean[0];
    scale = std::sqrt(std::max(var[0], 1e-12));
    for (auto& p : points) p[0] = (p[0] - shift) / scale;
  }

  OdmConfig resolved = config;
  if (config.kind == OdmKind::kOcsvm) {
    if (!(resolved.gamma > 0.0)) {
      auto [mean, var] = moments(points);
      double total_var = 0.0;
      for (double v : var) total_var += v;
      resolved.gamma = 1.0 / (2.0 * std::max(total_var / static_cast<double>(dim), 1e-12));
    }
    OcsvmOptions opt;
    opt.nu = resolved.nu;
    opt.gamma = resolved.gamma;
    opt.tol = resolved.tol;
    return OutlierModel(resolved, ocsvm_fit(points, opt), shift, scale);
  }

  IforestOptions opt;
  opt.trees = resolved.trees;
  opt.psi = resolved.psi;
  opt.seed = resolved.seed;
  opt.threshold_mode = resolved.threshold_mode;
  opt.contamination = resolved.contamination;
  opt.threads = resolved.threads;
  return OutlierModel(resolved, iforest_fit(points, opt), shift, scale);
}

OutlierModel odm_fit_on_scores(const std::vector<double>& scores, const OdmConfig& config) {
  std::vector<Point> points;
  points.reserve(scores.size());
  for (double s : scores) points.push_back({s});
  return odm_fit(points, config);
}

OutlierModel odm_fit_on_scores(const std::vector<embed::IccsValue>& scores, const OdmConfig& config) {
  std::vector<double> values;
  values.reserve(scores.size());
  for (const auto& s : scores) values.push_back(s.value);
  return odm_fit_on_scores(values, config);
}

void write_odm(const OutlierModel& model, std::ostream& out) {
  json header = {{"config", to_json(model.config())},
                 {"shift", model.shift()},
                 {"scale", model.scale()}};
  if (const auto* svm = std::get_if<OcsvmModel>(&model.model())) {
    header["ocsvm"] = {{"dim", svm->dim},         {"n_train", svm->n_train},
                       {"nu", svm->nu},           {"gamma", svm->gamma},
                       {"rho", svm->rho},         {"n_sv", svm->support_vectors.size()},
                       {"objective", svm->objective}};
  } else {
    const auto& f = std::get<IforestModel>(model.model());
    header["iforest"] = {{"dim", f.dim},
                         {"psi", f.psi},
                         {"threshold", f.threshold},
                         {"trees", f.trees.size()}};
  }
  const std::string text = header.dump();
  out.write(kOdmMagic.data(), static_cast<std::streamsize>(kOdmMagic.size()));
  binio::put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  if (const auto* svm = std::get_if<OcsvmModel>(&model.model())) {
    for (const auto& sv : svm->support_vectors) {
      for (double v : sv) binio::put<double>(out, v);
    }
    for (double a : svm->alpha) binio::put<double>(out, a);
  } else {
    for (const auto& tree : std::get<IforestModel>(model.model()).trees) {
      binio::put<std::uint64_t>(out, tree.nodes.size());
      for (const auto& n : tree.nodes) {
        binio::put<std::int32_t>(out, n.feature);
        binio::put<double>(out, n.split);
        binio::put<std::uint32_t>(out, n.left);
        binio::put<std::uint32_t>(out, n.right);
        binio::put<std::uint32_t>(out, n.size);
        binio::put<std::uint32_t>(out, n.depth);
      }
    }
  }
}

OutlierModel read_odm(std::istream& in) {
  binio::expect_magic(in, kOdmMagic);
  const auto len = binio::get<std::uint64_t>(in);
  if (len > (1ull << 30)) throw FormatError(0, "odm header too large");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) {
    throw FormatError(0, "truncated odm header");
  }
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(0, std::string("odm header is not valid JSON: ") + e.what());
  }
  const OdmConfig config = odm_config_from_json(header.at("config"));
  const double shift = header.at("shift").get<double>();
  const double scale = header.at("scale").get<double>();

  if (config.kind == OdmKind::kOcsvm) {
    const json& h = header.at("ocsvm");
    OcsvmModel m;
    m.dim = h.at("dim").get<std::size_t>();
    m.n_train = h.at("n_train").get<std::size_t>();
    m.nu = h.at("nu").get<double>();
    m.gamma = h.at("gamma").get<double>();
    m.rho = h.at("rho").get<double>();
    m.objective = h.value("objective", 0.0);
    const auto n_sv = h.at("n_sv").get<std::size_t>();
    if (m.dim == 0 || m.dim > (1u << 20) || n_sv > (1u << 28)) {
      throw FormatError(0, "odm: implausible array sizes");
    }
    m.support_vectors.assign(n_sv, Point(m.dim));
    for (auto& sv : m.support_vectors) {
      for (double& v : sv) v = binio::get<double>(in);
    }
    m.alpha.resize(n_sv);
    for (double& a : m.alpha) a = binio::get<double>(in);
    return OutlierModel(config, std::move(m), shift, scale);
  }

  const json& h = header.at("iforest");
  IforestModel f;
  f.dim = h.at("dim").get<std::size_t>();
  f.psi = h.at("psi").get<std::size_t>();
  f.threshold = h.at("threshold").get<double>();
  const auto n_trees = h.at("trees").get<std::size_t>();
  if (n_trees == 0 || n_trees > (1u << 24)) throw FormatError(0, "odm: implausible tree count");
  f.trees.resize(n_trees);
  for (auto& tree : f.trees) {
    const auto count = binio::get<std::uint64_t>(in);
    if (count == 0 || count > (1u << 26)) throw FormatError(0, "odm: implausible node count");
    tree.nodes.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
      auto& n = tree.nodes[k];
      n.feature = binio::get<std::int32_t>(in);
      n.split = binio::get<double>(in);
      n.left = binio::get<std::uint32_t>(in);
      n.right = binio::get<std::uint32_t>(in);
      n.size = binio::get<std::uint32_t>(in);
      n.depth = binio::get<std::uint32_t>(in);
      // Children always follow their parent, which also rules out cycles.
      if (!n.is_leaf() && (n.left >= count || n.right >= count || n.left <= k || n.right <= k ||
                           static_cast<std::size_t>(n.feature) >= f.dim)) {
        throw FormatError(0, "odm: tree node references out of range");
      }
    }
  }
  return OutlierModel(config, std::move(f), shift, scale);
}

void save_odm(const OutlierModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write odm file " + path.string());
  write_odm(model, out);
  if (!out) throw Error("write failed for " + path.string());
}

OutlierModel load_odm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open odm file " + path.string());
  return read_odm(in);
}

}  // namespace miverify::odm
