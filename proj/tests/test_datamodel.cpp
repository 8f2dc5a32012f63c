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

#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include <gtest/gtest.h>

#include "miverify/dataset_io.hpp"
#include "miverify/datamodel.hpp"
#include "miverify/errors.hpp"
#include "test_support.hpp"

namespace miverify::data {
namespace {

using testing::make_package;
using testing::random_dataset;

FeatureDataset three_packages() {
  FeatureDataset ds;
  ds.name = "three";
  ds.d_img = 2;
  ds.d_cap = 1;
  ds.packages = {make_package("a", "i1", {1, 2}, {3}), make_package("b", "i2", {4, 5}, {6}),
                 make_package("c", "i3", {7, 8}, {9})};
  return ds;
}

TEST(Validate, WellFormedHasNoViolations) { EXPECT_TRUE(validate_dataset(three_packages()).empty()); }

TEST(Validate, NanNamesThePackage) {
  auto ds = three_packages();
  ds.packages[1].image_features[0] = std::numeric_limits<double>::quiet_NaN();
  const auto v = validate_dataset(ds);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].package_id, "b");
}

TEST(Validate, DuplicateIdIsOneViolation) {
  auto ds = three_packages();
  ds.packages[2].package_id = "a";
  const auto v = validate_dataset(ds);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].package_id, "a");
  EXPECT_NE(v[0].rule.find("duplicate"), std::string::npos);
}

TEST(Validate, DimensionMismatches) {
  auto ds = three_packages();
  ds.packages[0].image_features.push_back(1.0);
  ds.packages[1].caption_features->clear();
  EXPECT_EQ(validate_dataset(ds).size(), 2u);
  EXPECT_THROW(require_valid(ds), ValidationError);
}

TEST(Validate, MissingCaptionFeaturesAllowed) {
  auto ds = three_packages();
  ds.packages[0].caption_features.reset();
  EXPECT_TRUE(validate_dataset(ds).empty());
}

TEST(Split, BadFractionsAreConfigErrors) {
  const auto ds = three_packages();
  EXPECT_THROW(split_dataset(ds, {0.5, 0.5, 0.5, 0}), ConfigError);
  EXPECT_THROW(split_dataset(ds, {-0.1, 0.6, 0.5, 0}), ConfigError);
  EXPECT_NO_THROW(split_dataset(ds, {1.0, 0.0, 0.0, 0}));
}

TEST(Split, PartitionAndGroupIntegrity) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto ds = random_dataset(97, 2, 2, seed, 1 + seed % 4);
    const auto s = split_dataset(ds, {0.7, 0.2, 0.1, seed});
    std::multiset<std::string> ids;
    std::unordered_map<std::string, int> where;
    int k = 0;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
      for (const auto& p : part->packages) {
        ids.insert(p.package_id);
        auto [it, inserted] = where.try_emplace(p.image_id, k);
        EXPECT_EQ(it->second, k) << "image " << p.image_id << " crosses splits";
      }
      ++k;
    }
    std::multiset<std::string> expected;
    for (const auto& p : ds.packages) expected.insert(p.package_id);
    EXPECT_EQ(ids, expected);
    // Sizes within one group of the targets.
    const double group = 1 + seed % 4;
    EXPECT_LE(std::abs(static_cast<double>(s.train.size()) - 0.7 * 97), group + 1);
    EXPECT_LE(std::abs(static_cast<double>(s.val.size()) - 0.2 * 97), 2 * group + 1);
  }
}

TEST(Split, DeterministicAndOrderPreserving) {
  const auto ds = random_dataset(40, 2, 2, 3, 2);
  const auto a = split_dataset(ds, {0.5, 0.25, 0.25, 11});
  const auto b = split_dataset(ds, {0.5, 0.25, 0.25, 11});
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  for (const auto* part : {&a.train, &a.val, &a.test}) {
    for (std::size_t i = 1; i < part->size(); ++i) {
      EXPECT_LT(std::stoi(part->packages[i - 1].package_id.substr(1)),
                std::stoi(part->packages[i].package_id.substr(1)));
    }
  }
}

TEST(Tamper, FourPackagesHalfRate) {
  FeatureDataset ds;
  ds.d_img = 1;
  ds.d_cap = 1;
  for (int i = 0; i < 4; ++i) {
    ds.packages.push_back(make_package("p" + std::to_string(i), "i" + std::to_string(i),
                                       {double(i)}, {double(10 + i)}, "cap" + std::to_string(i)));
  }
  const auto t = tamper(ds, 0.5, 5);
  int tampered = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& p = t.packages[i];
    if (p.label == Label::kTampered) {
      ++tampered;
      EXPECT_NE(p.caption_text, ds.packages[i].caption_text);
      // Text and features travel together.
      EXPECT_EQ(p.caption_text, "cap" + std::to_string(int((*p.caption_features)[0]) - 10));
    } else {
      EXPECT_EQ(p.label, Label::kClean);
      EXPECT_EQ(p, with_labels(ds, Label::kClean).packages[i]);
    }
  }
  EXPECT_EQ(tampered, 2);
}

TEST(Tamper, FullRateOnThreeIsDerangement) {
  auto ds = three_packages();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = tamper(ds, 1.0, seed);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(t.packages[i].label, Label::kTampered);
      EXPECT_NE(t.packages[i].caption_features, ds.packages[i].caption_features);
    }
  }
}

TEST(Tamper, SameSeedSameResult) {
  const auto ds = random_dataset(30, 3, 2, 1, 3);
  EXPECT_EQ(tamper(ds, 0.5, 9), tamper(ds, 0.5, 9));
  EXPECT_NE(tamper(ds, 0.5, 9), tamper(ds, 0.5, 10));
}

TEST(Tamper, SingletonSelectionGrows) {
  EXPECT_EQ(tamper_count(10, 0.1), 2u);
  EXPECT_EQ(tamper_count(10, 0.5), 5u);
  EXPECT_EQ(tamper_count(3, 0.5), 2u);
  EXPECT_EQ(tamper_count(400, 0.5), 200u);
  EXPECT_EQ(tamper_count(7, 1.0), 7u);
}

TEST(Tamper, Errors) {
  FeatureDataset one;
  one.d_img = one.d_cap = 1;
  one.packages = {make_package("a", "i", {1}, {1})};
  EXPECT_THROW(tamper(one, 0.5, 0), ValidationError);
  auto same = three_packages();
  for (auto& p : same.packages) p.image_id = "shared";
  EXPECT_THROW(tamper(same, 0.5, 0), ValidationError);
  EXPECT_THROW(tamper(three_packages(), 0.0, 0), ConfigError);
  EXPECT_THROW(tamper(three_packages(), 1.5, 0), ConfigError);
}

TEST(Tamper, HeavyImageGroupsStillDerange) {
  // One image owns most of the packages; donors must come from elsewhere.
  auto ds = random_dataset(20, 2, 2, 4);
  for (std::size_t i = 0; i < 12; ++i) ds.packages[i].image_id = "big";
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto t = tamper(ds, 0.5, seed);
    std::size_t tampered = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (t.packages[i].label != Label::kTampered) continue;
      ++tampered;
      for (std::size_t j = 0; j < ds.size(); ++j) {
        if (ds.packages[j].caption_features == t.packages[i].caption_features) {
          EXPECT_NE(ds.packages[j].image_id, ds.packages[i].image_id);
        }
      }
    }
    EXPECT_EQ(tampered, 10u);
  }
}

TEST(DatasetIo, RoundTripIsBitExact) {
  auto ds = random_dataset(2, 3, 2, 8);
  ds.packages[0].image_features[0] = -0.0;
  ds.packages[0].image_features[1] = 1e-310;  // subnormal
  ds.packages[1].image_features[2] = 0.1 + 0.2;
  ds.packages[1].caption_features.reset();
  ds.packages[1].caption_text = "unicode \xc3\xa9t\xc3\xa9 \"quoted\"";
  ds.packages[0].label = Label::kTampered;
  std::stringstream buf;
  write_dataset(ds, buf);
  const auto back = read_dataset(buf);
  EXPECT_EQ(back, ds);
  EXPECT_TRUE(std::signbit(back.packages[0].image_features[0]));
}

TEST(DatasetIo, CaptionDimMismatchNamesLine7) {
  auto ds = random_dataset(6, 2, 2, 1);
  ds.packages[5].caption_features->push_back(0.5);
  std::stringstream buf;
  write_dataset(ds, buf);
  try {
    read_dataset(buf);
    FAIL() << "expected a FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 7u);
    EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos);
  }
}

TEST(DatasetIo, MalformedJsonNamesLine) {
  std::stringstream buf;
  buf << R"({"format":"miverify-fpk/1","d_img":1,"d_cap":1})" << "\n";
  buf << R"({"package_id":"a","image_id":"i","caption":"","image_features":[1]})" << "\n";
  buf << "{not json\n";
  try {
    read_dataset(buf);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(DatasetIo, HeaderOnlyIsEmptyDataset) {
  std::stringstream buf;
  buf << R"({"format":"miverify-fpk/1","d_img":4,"d_cap":3,"name":"x"})" << "\n";
  const auto ds = read_dataset(buf);
  EXPECT_TRUE(ds.empty());
  EXPECT_EQ(ds.d_img, 4u);
  EXPECT_EQ(ds.d_cap, 3u);
}

TEST(DatasetIo, EmptyFileIsFormatError) {
  std::stringstream buf;
  EXPECT_THROW(read_dataset(buf), FormatError);
}

TEST(DatasetIo, BadLabelAndHeader) {
  std::stringstream a;
  a << R"({"format":"other/1","d_img":1,"d_cap":1})" << "\n";
  EXPECT_THROW(read_dataset(a), FormatError);
  std::stringstream b;
  b << R"({"format":"miverify-fpk/1","d_img":1,"d_cap":1})" << "\n"
    << R"({"package_id":"a","image_id":"i","caption":"","image_features":[1],"label":"odd"})"
    << "\n";
  EXPECT_THROW(read_dataset(b), FormatError);
}

}  // namespace
}  // namespace miverify::data
