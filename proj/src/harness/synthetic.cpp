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

#include "miverify/harness/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "miverify/errors.hpp"
#include "miverify/rng.hpp"

namespace miverify::harness {

using nlohmann::json;

void SyntheticSpec::check() const {
  if (latent_dim == 0 || d_img == 0 || d_cap == 0) {
    throw ConfigError("synthetic: dimensions must be positive");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("synthetic: noise must be >= 0");
  if (n_train == 0 || n_val == 0 || n_test == 0) throw ConfigError("synthetic: sizes must be >= 1");
  if (bins < 2) throw ConfigError("synthetic: need at least 2 bins per coordinate");
  if (captions_per_image == 0) throw ConfigError("synthetic: captions_per_image must be >= 1");
}

json to_json(const SyntheticSpec& s) {
  return {{"latent_dim", s.latent_dim}, {"d_img", s.d_img},
          {"d_cap", s.d_cap},           {"noise", s.noise},
          {"n_train", s.n_train},       {"n_val", s.n_val},
          {"n_test", s.n_test},         {"bins", s.bins},
          {"captions_per_image", s.captions_per_image}, {"seed", s.seed}};
}

SyntheticSpec synthetic_spec_from_json(const json& j, SyntheticSpec s) {
  if (!j.is_object()) throw ConfigError("synthetic spec must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "latent_dim") {
      s.latent_dim = value.get<std::size_t>();
    } else if (key == "d_img") {
      s.d_img = value.get<std::size_t>();
    } else if (key == "d_cap") {
      s.d_cap = value.get<std::size_t>();
    } else if (key == "noise") {
      s.noise = value.get<double>();
    } else if (key == "n_train") {
      s.n_train = value.get<std::size_t>();
    } else if (key == "n_val") {
      s.n_val = value.get<std::size_t>();
    } else if (key == "n_test") {
      s.n_test = value.get<std::size_t>();
    } else if (key == "bins") {
      s.bins = value.get<std::size_t>();
    } else if (key == "captions_per_image") {
      s.captions_per_image = value.get<std::size_t>();
    } else if (key == "seed") {
      s.seed = value.get<std::uint64_t>();
    } else {
      throw ConfigError("unknown synthetic spec key '" + key + "'");
    }
  }
  s.check();
  return s;
}

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Standard-normal quantiles at 1/bins, ..., (bins-1)/bins by bisection.
std::vector<double> bin_edges(std::size_t bins) {
  std::vector<double> edges;
  for (std::size_t q = 1; q < bins; ++q) {
    const double target = static_cast<double>(q) / static_cast<double>(bins);
    double lo = -10.0, hi = 10.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (normal_cdf(mid) < target ? lo : hi) = mid;
    }
    edges.push_back(0.5 * (lo + hi));
  }
  return edges;
}

nn::Matrix mixing(std::size_t rows, std::size_t k, Rng& rng) {
  nn::Matrix m(rows, k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * scale;
  return m;
}

data::FeatureDataset make_split(const SyntheticSpec& spec, const SyntheticData& sd,
                                const std::vector<double>& edges, const std::string& name,
                                std::size_t images, std::uint64_t seed) {
  Rng rng(seed);
  data::FeatureDataset ds;
  ds.name = "synthetic/" + name;
  ds.d_img = spec.d_img;
  ds.d_cap = spec.d_cap;
  ds.packages.reserve(images * spec.captions_per_image);

  Eigen::VectorXd z(spec.latent_dim);
  char id[64];
  for (std::size_t img = 0; img < images; ++img) {
    for (auto& v : z) v = rng.normal();
    Eigen::VectorXd image = sd.image_mixing * z;
    for (auto& v : image) v += spec.noise * rng.normal();

    std::string caption;
    for (std::size_t j = 0; j < spec.latent_dim; ++j) {
      std::size_t bin = 0;
      while (bin < edges.size() && z[j] >= edges[bin]) ++bin;
      if (j) caption += ' ';
      caption += "z" + std::to_string(j) + "q" + std::to_string(bin);
    }

    std::snprintf(id, sizeof id, "%s-img%06zu", name.c_str(), img);
    const std::string image_id = id;
    for (std::size_t c = 0; c < spec.captions_per_image; ++c) {
      Eigen::VectorXd cap = sd.caption_mixing * z;
      for (auto& v : cap) v += spec.noise * rng.normal();
      data::MediaPackage p;
      std::snprintf(id, sizeof id, "%s-%06zu-%zu", name.c_str(), img, c);
      p.package_id = id;
      p.image_id = image_id;
      p.caption_text = caption;
      p.image_features.assign(image.data(), image.data() + image.size());
      p.caption_features = std::vector<double>(cap.data(), cap.data() + cap.size());
      p.label = data::Label::kClean;
      ds.packages.push_back(std::move(p));
    }
  }
  return ds;
}

}  // namespace

SyntheticData make_synthetic(const SyntheticSpec& spec) {
  spec.check();
  SyntheticData sd;
  Rng mix_rng(derive_seed(spec.seed, "mixing"));
  sd.image_mixing = mixing(spec.d_img, spec.latent_dim, mix_rng);
  sd.caption_mixing = mixing(spec.d_cap, spec.latent_dim, mix_rng);

  const auto edges = bin_edges(spec.bins);
  sd.splits.train = make_split(spec, sd, edges, "train", spec.n_train, derive_seed(spec.seed, "train"));
  sd.splits.val = make_split(spec, sd, edges, "val", spec.n_val, derive_seed(spec.seed, "val"));
  sd.splits.test = make_split(spec, sd, edges, "test", spec.n_test, derive_seed(spec.seed, "test"));
  return sd;
}

}  // namespace miverify::harness
