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

#include "miverify/dataset_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "miverify/errors.hpp"

namespace miverify::data {

using nlohmann::json;

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  std::string s(buf);
  // Keep the token a JSON float so that -0.0 survives a round trip.
  if (s.find_first_of(".eEni") == std::string::npos) s += ".0";
  return s;
}

namespace {

std::vector<double> read_vector(const json& j, std::size_t line, const char* field) {
  if (!j.is_array()) throw FormatError(line, std::string(field) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw FormatError(line, std::string(field) + " holds a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

const json& require(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(line, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, std::size_t line) {
  const json& v = require(obj, key, line);
  if (!v.is_string()) throw FormatError(line, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::size_t require_dim(const json& obj, const char* key, std::size_t line) {
  const json& v = require(obj, key, line);
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    throw FormatError(line, std::string("header field '") + key + "' must be a positive integer");
  }
  return v.get<std::size_t>();
}

json parse_line(const std::string& text, std::size_t line) {
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw FormatError(line, "expected a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw FormatError(line, std::string("malformed JSON: ") + e.what());
  }
}

void write_vector(std::ostream& out, const std::vector<double>& v, const std::string& id) {
  out << '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw ValidationError("package '" + id + "': cannot serialize non-finite feature");
    }
    if (i) out << ',';
    out << format_double(v[i]);
  }
  out << ']';
}

}  // namespace

FeatureDataset read_dataset(std::istream& in) {
  std::string text;
  std::size_t line = 0;
  FeatureDataset ds;

  bool have_header = false;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    const json obj = parse_line(text, line);

    if (!have_header) {
      const std::string format = require_string(obj, "format", line);
      if (format != kFeatureFormat) {
        throw FormatError(line, "unsupported format '" + format + "'");
      }
      ds.d_img = require_dim(obj, "d_img", line);
      ds.d_cap = require_dim(obj, "d_cap", line);
      if (auto it = obj.find("name"); it != obj.end() && it->is_string()) {
        ds.name = it->get<std::string>();
      }
      have_header = true;
      continue;
    }

    MediaPackage p;
    p.package_id = require_string(obj, "package_id", line);
    p.image_id = require_string(obj, "image_id", line);
    p.caption_text = require_string(obj, "caption", line);
    p.image_features = read_vector(require(obj, "image_features", line), line, "image_features");
    if (p.image_features.size() != ds.d_img) {
      throw FormatError(line, "image_features has length " + std::to_string(p.image_features.size()) +
                                  ", header declares d_img " + std::to_string(ds.d_img));
    }
    if (auto it = obj.find("caption_features"); it != obj.end() && !it->is_null()) {
      p.caption_features = read_vector(*it, line, "caption_features");
      if (p.caption_features->size() != ds.d_cap) {
        throw FormatError(line, "caption_features has length " +
                                    std::to_string(p.caption_features->size()) +
                                    ", header declares d_cap " + std::to_string(ds.d_cap));
      }
    }
    if (auto it = obj.find("label"); it != obj.end()) {
      if (!it->is_string()) throw FormatError(line, "field 'label' must be a string");
      try {
        p.label = parse_label(it->get<std::string>());
      } catch (const ConfigError& e) {
        throw FormatError(line, e.what());
      }
    }
    ds.packages.push_back(std::move(p));
  }
  if (!have_header) throw FormatError(1, "missing miverify-fpk/1 header line");
  return ds;
}

void write_dataset(const FeatureDataset& ds, std::ostream& out) {
  json header = {{"format", kFeatureFormat}, {"d_img", ds.d_img}, {"d_cap", ds.d_cap}, {"name", ds.name}};
  out << header.dump() << '\n';
  for (const MediaPackage& p : ds.packages) {
    out << "{\"package_id\":" << json(p.package_id).dump()
        << ",\"image_id\":" << json(p.image_id).dump()
        << ",\"caption\":" << json(p.caption_text).dump() << ",\"image_features\":";
    write_vector(out, p.image_features, p.package_id);
    out << ",\"caption_features\":";
    if (p.caption_features) {
      write_vector(out, *p.caption_features, p.package_id);
    } else {
      out << "null";
    }
    out << ",\"label\":\"" << to_string(p.label) << "\"}\n";
  }
}

FeatureDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file " + path.string());
  return read_dataset(in);
}

void save_dataset(const FeatureDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write dataset file " + path.string());
  write_dataset(ds, out);
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace miverify::data
