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

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "miverify/datamodel.hpp"

namespace miverify::embed {

// Caption vocabulary. Index 0 is the unknown token; known tokens follow in
// order of first appearance in the corpus.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  // Lowercases ASCII letters and splits on runs of characters that are not
  // ASCII alphanumerics. Bytes >= 0x80 count as word characters so UTF-8
  // words stay whole.
  static std::vector<std::string> tokenize(std::string_view text);

  // Tokens seen fewer than `min_count` times map to the unknown token.
  static Vocabulary build(const std::vector<std::string>& captions, std::size_t min_count = 1);

  std::size_t size() const { return tokens_.size(); }
  int index(const std::string& token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Token indices of a caption; an empty caption encodes as [unk].
  std::vector<int> encode(std::string_view caption) const;

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  void push(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

Vocabulary build_vocab(const data::FeatureDataset& rd, std::size_t min_count = 1);

}  // namespace miverify::embed
