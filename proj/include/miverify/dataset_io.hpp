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

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "miverify/datamodel.hpp"

namespace miverify::data {

inline constexpr std::string_view kFeatureFormat = "miverify-fpk/1";

// NDJSON feature-package files. Line 1 is a header object
//   {"format":"miverify-fpk/1","d_img":N,"d_cap":M,"name":"..."}
// and every following non-blank line is one package. Features are written
// with 17 significant digits so load(save(ds)) is bit-exact.
FeatureDataset read_dataset(std::istream& in);
void write_dataset(const FeatureDataset& ds, std::ostream& out);

FeatureDataset load_dataset(const std::filesystem::path& path);
void save_dataset(const FeatureDataset& ds, const std::filesystem::path& path);

// Shortest-safe decimal rendering of a double with 17 significant digits.
std::string format_double(double value);

}  // namespace miverify::data
