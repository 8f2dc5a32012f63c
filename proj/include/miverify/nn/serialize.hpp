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

#include <iosfwd>
#include <string_view>

#include "miverify/nn/parameters.hpp"

namespace miverify::nn {

inline constexpr std::string_view kParamMagic = "MIVNN1";

// Binary layout, all integers and reals little-endian:
//   "MIVNN1"
//   u64 parameter count, then per parameter:
//     u32 name length, name bytes, u64 rows, u64 cols, rows*cols f64 row-major
//   u64 alias count, then per alias:
//     u32 name length, name bytes, u32 target name length, target name, u8 transposed
void write_parameters(const ParameterSet& params, std::ostream& out);
ParameterSet read_parameters(std::istream& in);

}  // namespace miverify::nn
