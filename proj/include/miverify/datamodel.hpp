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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace miverify::data {

enum class Label { kClean, kTampered, kUnknown };

std::string_view to_string(Label label);
// Throws ConfigError on anything other than clean/tampered/unknown.
Label parse_label(std::string_view text);

// One image-caption pair.
struct MediaPackage {
  std::string package_id;
  std::string image_id;
  std::string caption_text;
  std::vector<double> image_features;
  std::optional<std::vector<double>> caption_features;
  Label label = Label::kUnknown;

  bool operator==(const MediaPackage&) const = default;
};

// Ordered packages with declared feature dimensions. The training split of
// one of these is the reference dataset the detector is calibrated on.
struct FeatureDataset {
  std::string name;
  std::size_t d_img = 0;
  std::size_t d_cap = 0;
  std::vector<MediaPackage> packages;

  std::size_t size() const { return packages.size(); }
  bool empty() const { return packages.empty(); }

  bool operator==(const FeatureDataset&) const = default;
};

struct Violation {
  std::string package_id;  // empty for dataset-level rules
  std::string rule;
};

// Returns every broken invariant; an empty result means the dataset is valid.
std::vector<Violation> validate_dataset(const FeatureDataset& ds);

// Throws ValidationError summarizing the first few violations, if any.
void require_valid(const FeatureDataset& ds);

struct SplitSpec {
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;

  // Throws ConfigError unless fractions are in [0,1] and sum to 1 +- 1e-9.
  void check() const;
};

struct Splits {
  FeatureDataset train;
  FeatureDataset val;
  FeatureDataset test;
};

// Image-grouped random partition: every package sharing an image_id lands in
// the same split. Groups are shuffled by seed and assigned by cumulative
// package count, so split sizes track the fractions to within one group.
// Packages keep their original relative order inside each split.
Splits split_dataset(const FeatureDataset& ds, const SplitSpec& spec);

// Number of packages tamper() relabels for a dataset of size n.
std::size_t tamper_count(std::size_t n, double rate);

// Caption-swap manipulation. Selects ceil(rate * n) packages uniformly at
// random and permutes their captions (text and features together) so that no
// selected package keeps its caption or receives one from a package with the
// same image_id. Selected packages become kTampered, the rest kClean.
// Donors come only from `ds` itself.
FeatureDataset tamper(const FeatureDataset& ds, double rate, std::uint64_t seed);

// Copy with every label set to `label`.
FeatureDataset with_labels(FeatureDataset ds, Label label);

}  // namespace miverify::data
