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

#include "miverify/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "miverify/errors.hpp"
#include "miverify/rng.hpp"

namespace miverify::data {

std::string_view to_string(Label label) {
  switch (label) {
    case Label::kClean:
      return "clean";
    case Label::kTampered:
      return "tampered";
    case Label::kUnknown:
      return "unknown";
  }
  return "unknown";
}

Label parse_label(std::string_view text) {
  if (text == "clean") return Label::kClean;
  if (text == "tampered") return Label::kTampered;
  if (text == "unknown") return Label::kUnknown;
  throw ConfigError("unknown label '" + std::string(text) + "'");
}

namespace {

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::vector<Violation> validate_dataset(const FeatureDataset& ds) {
  std::vector<Violation> out;
  if (ds.d_img == 0) out.push_back({"", "d_img must be positive"});
  if (ds.d_cap == 0) out.push_back({"", "d_cap must be positive"});

  std::unordered_set<std::string> seen;
  seen.reserve(ds.packages.size());
  for (const MediaPackage& p : ds.packages) {
    if (p.package_id.empty()) out.push_back({p.package_id, "package_id is empty"});
    if (!seen.insert(p.package_id).second) {
      out.push_back({p.package_id, "duplicate package_id"});
    }
    if (p.image_features.empty()) {
      out.push_back({p.package_id, "image_features is empty"});
    } else if (p.image_features.size() != ds.d_img) {
      out.push_back({p.package_id, "image_features length " +
                                       std::to_string(p.image_features.size()) +
                                       " != d_img " + std::to_string(ds.d_img)});
    }
    if (!all_finite(p.image_features)) {
      out.push_back({p.package_id, "image_features has a non-finite value"});
    }
    if (p.caption_features) {
      if (p.caption_features->size() != ds.d_cap) {
        out.push_back({p.package_id, "caption_features length " +
                                         std::to_string(p.caption_features->size()) +
                                         " != d_cap " + std::to_string(ds.d_cap)});
      }
      if (!all_finite(*p.caption_features)) {
        out.push_back({p.package_id, "caption_features has a non-finite value"});
      }
    }
  }
  return out;
}

void require_valid(const FeatureDataset& ds) {
  const auto violations = validate_dataset(ds);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "dataset '" << ds.name << "' has " << violations.size() << " violation(s)";
  const std::size_t shown = std::min<std::size_t>(violations.size(), 5);
  for (std::size_t i = 0; i < shown; ++i) {
    msg << "; " << (violations[i].package_id.empty() ? "<dataset>" : violations[i].package_id)
        << ": " << violations[i].rule;
  }
  throw ValidationError(msg.str());
}

void SplitSpec::check() const {
  for (double f : {train_fraction, val_fraction, test_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw ConfigError("split fractions must lie in [0, 1]");
    }
  }
  const double sum = train_fraction + val_fraction + test_fraction;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1 (got " + std::to_string(sum) + ")");
  }
}

Splits split_dataset(const FeatureDataset& ds, const SplitSpec& spec) {
  spec.check();

  // Image groups in order of first appearance.
  std::unordered_map<std::string, std::size_t> group_of;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < ds.packages.size(); ++i) {
    auto [it, inserted] = group_of.try_emplace(ds.packages[i].image_id, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }

  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::size_t>(order));

  const std::size_t n = ds.packages.size();
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * n));
  const auto n_val = static_cast<std::size_t>(std::llround(spec.val_fraction * n));

  // 0 = train, 1 = val, 2 = test
  std::vector<int> where(n, 2);
  std::size_t placed = 0;
  for (std::size_t g : order) {
    const int target = placed < n_train ? 0 : (placed < n_train + n_val ? 1 : 2);
    for (std::size_t i : groups[g]) where[i] = target;
    placed += groups[g].size();
  }

  Splits out;
  FeatureDataset* parts[] = {&out.train, &out.val, &out.test};
  const char* suffix[] = {"/train", "/val", "/test"};
  for (int k = 0; k < 3; ++k) {
    parts[k]->name = ds.name + suffix[k];
    parts[k]->d_img = ds.d_img;
    parts[k]->d_cap = ds.d_cap;
  }
  for (std::size_t i = 0; i < n; ++i) parts[where[i]]->packages.push_back(ds.packages[i]);
  return out;
}

std::size_t tamper_count(std::size_t n, double rate) {
  // The small slack keeps rate*n that is integral up to rounding from
  // ceiling one past the intended value.
  auto k = static_cast<std::size_t>(std::ceil(rate * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);
  if (k == 1 && n >= 2) k = 2;  // a single package has no derangement
  return k;
}

namespace {

// Selects `k` indices following `order`, then swaps members of an
// over-represented image group for later candidates until no image holds
// more than half of the selection (the condition for a same-image-free
// derangement to exist).
std::vector<std::size_t> balanced_selection(const std::vector<std::size_t>& order,
                                            const std::vector<std::size_t>& image_of,
                                            std::size_t k) {
  std::vector<std::size_t> selected(order.begin(), order.begin() + k);
  std::unordered_map<std::size_t, std::size_t> count;
  for (std::size_t i : selected) ++count[image_of[i]];

  std::size_t next = k;
  while (true) {
    auto dominant = std::max_element(
        count.begin(), count.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    if (2 * dominant->second <= k) break;
    const std::size_t g = dominant->first;

    while (next < order.size()) {
      const std::size_t cand = order[next];
      const std::size_t cg = image_of[cand];
      if (cg != g && 2 * (count[cg] + 1) <= k) break;
      ++next;
    }
    if (next >= order.size()) {
      throw ValidationError(
          "tamper: no caption derangement avoids same-image donors for this dataset");
    }
    // Replace the most recently selected member of the dominant group.
    auto victim = std::find_if(selected.rbegin(), selected.rend(),
                               [&](std::size_t i) { return image_of[i] == g; });
    const std::size_t cand = order[next++];
    *victim = cand;
    --count[g];
    ++count[image_of[cand]];
  }
  return selected;
}

// Constructive fallback: lay the selection out grouped by image, largest
// group first, and rotate by the largest group size. Valid whenever no group
// exceeds half of the selection.
std::vector<std::size_t> rotation_derangement(const std::vector<std::size_t>& groups_of_slot) {
  const std::size_t k = groups_of_slot.size();
  std::unordered_map<std::size_t, std::vector<std::size_t>> members;
  std::vector<std::size_t> group_order;
  for (std::size_t s = 0; s < k; ++s) {
    auto& m = members[groups_of_slot[s]];
    if (m.empty()) group_order.push_back(groups_of_slot[s]);
    m.push_back(s);
  }
  std::stable_sort(group_order.begin(), group_order.end(), [&](std::size_t a, std::size_t b) {
    return members[a].size() > members[b].size();
  });
  std::vector<std::size_t> layout;
  for (std::size_t g : group_order) {
    layout.insert(layout.end(), members[g].begin(), members[g].end());
  }
  const std::size_t shift = members[group_order.front()].size();
  std::vector<std::size_t> perm(k);
  for (std::size_t p = 0; p < k; ++p) perm[layout[p]] = layout[(p + shift) % k];
  return perm;
}

}  // namespace

FeatureDataset tamper(const FeatureDataset& ds, double rate, std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0)) throw ConfigError("tamper rate must lie in (0, 1]");
  const std::size_t n = ds.packages.size();
  if (n < 2) throw ValidationError("tamper needs at least 2 packages");

  std::unordered_map<std::string, std::size_t> image_index;
  std::vector<std::size_t> image_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    image_of[i] = image_index.try_emplace(ds.packages[i].image_id, image_index.size()).first->second;
  }
  if (image_index.size() < 2) {
    throw ValidationError("tamper needs packages from at least 2 distinct images");
  }

  const std::size_t k = tamper_count(n, rate);
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));
  const std::vector<std::size_t> selected = balanced_selection(order, image_of, k);

  std::vector<std::size_t> slot_image(k);
  for (std::size_t s = 0; s < k; ++s) slot_image[s] = image_of[selected[s]];

  // Rejection sampling gives a uniform draw over valid derangements; the
  // constructive rotation only kicks in for pathological group structure.
  std::vector<std::size_t> perm(k);
  bool found = false;
  for (int attempt = 0; attempt < 1000 && !found; ++attempt) {
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::size_t>(perm));
    found = true;
    for (std::size_t s = 0; s < k; ++s) {
      if (slot_image[perm[s]] == slot_image[s]) {
        found = false;
        break;
      }
    }
  }
  if (!found) perm = rotation_derangement(slot_image);

  FeatureDataset out = with_labels(ds, Label::kClean);
  for (std::size_t s = 0; s < k; ++s) {
    MediaPackage& receiver = out.packages[selected[s]];
    const MediaPackage& donor = ds.packages[selected[perm[s]]];
    receiver.caption_text = donor.caption_text;
    receiver.caption_features = donor.caption_features;
    receiver.label = Label::kTampered;
  }
  return out;
}

FeatureDataset with_labels(FeatureDataset ds, Label label) {
  for (auto& p : ds.packages) p.label = label;
  return ds;
}

}  // namespace miverify::data
