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

#include "miverify/embed/vocab.hpp"

#include "miverify/errors.hpp"

namespace miverify::embed {

Vocabulary::Vocabulary() { push(std::string(kUnkToken)); }

void Vocabulary::push(const std::string& token) {
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

std::vector<std::string> Vocabulary::tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    const bool word = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                      (c >= 'A' && c <= 'Z') || c >= 0x80;
    if (word) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& captions, std::size_t min_count) {
  std::unordered_map<std::string, std::size_t> counts;
  std::vector<std::string> first_seen;
  for (const auto& caption : captions) {
    for (auto& tok : tokenize(caption)) {
      if (counts[tok]++ == 0) first_seen.push_back(tok);
    }
  }
  Vocabulary vocab;
  for (const auto& tok : first_seen) {
    if (counts[tok] >= min_count && tok != kUnkToken) vocab.push(tok);
  }
  return vocab;
}

int Vocabulary::index(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(std::string_view caption) const {
  std::vector<int> ids;
  for (const auto& tok : tokenize(caption)) ids.push_back(index(tok));
  if (ids.empty()) ids.push_back(kUnk);
  return ids;
}

nlohmann::json Vocabulary::to_json() const {
  return nlohmann::json(std::vector<std::string>(tokens_.begin() + 1, tokens_.end()));
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError(0, "vocabulary must be a JSON array");
  Vocabulary vocab;
  for (const auto& t : j) {
    const auto tok = t.get<std::string>();
    if (vocab.index_.count(tok)) throw FormatError(0, "duplicate vocabulary token '" + tok + "'");
    vocab.push(tok);
  }
  return vocab;
}

Vocabulary build_vocab(const data::FeatureDataset& rd, std::size_t min_count) {
  std::vector<std::string> captions;
  captions.reserve(rd.size());
  for (const auto& p : rd.packages) captions.push_back(p.caption_text);
  return Vocabulary::build(captions, min_count);
}

}  // namespace miverify::embed
