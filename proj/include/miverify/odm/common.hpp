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

#include <string_view>
#include <vector>

namespace miverify::odm {

using Point = std::vector<double>;

enum class Verdict { kInlier, kOutlier };

std::string_view to_string(Verdict v);

// Copy of `points` in lexicographic order. Both detectors fit on this
// canonical ordering so that their output does not depend on input order.
std::vector<Point> canonical_order(std::vector<Point> points);

// Throws ValidationError unless points are non-empty, share one positive
// dimension and are finite.
std::size_t check_points(const std::vector<Point>& points);

}  // namespace miverify::odm
