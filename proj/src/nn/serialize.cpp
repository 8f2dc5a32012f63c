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

#include "miverify/nn/serialize.hpp"

#include <istream>
#include <ostream>

#include "miverify/binary_io.hpp"
#include "miverify/errors.hpp"

namespace miverify::nn {

void write_parameters(const ParameterSet& params, std::ostream& out) {
  out.write(kParamMagic.data(), static_cast<std::streamsize>(kParamMagic.size()));
  binio::put<std::uint64_t>(out, params.size());
  for (const Parameter& p : params.parameters()) {
    binio::put_string(out, p.name);
    binio::put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.rows()));
    binio::put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.cols()));
    for (Eigen::Index i = 0; i < p.value.size(); ++i) binio::put<double>(out, p.value.data()[i]);
  }
  binio::put<std::uint64_t>(out, params.aliases().size());
  for (const auto& a : params.aliases()) {
    binio::put_string(out, a.name);
    binio::put_string(out, params[a.target].name);
    binio::put<std::uint8_t>(out, a.transposed ? 1 : 0);
  }
}

ParameterSet read_parameters(std::istream& in) {
  binio::expect_magic(in, kParamMagic);
  ParameterSet params;
  const auto count = binio::get<std::uint64_t>(in);
  for (std::uint64_t n = 0; n < count; ++n) {
    std::string name = binio::get_string(in);
    const auto rows = binio::get<std::uint64_t>(in);
    const auto cols = binio::get<std::uint64_t>(in);
    if (rows > (1u << 28) || cols > (1u << 28) || rows * cols > (1ull << 32)) {
      throw FormatError(0, "parameter '" + name + "' has an implausible shape");
    }
    Matrix value(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < value.size(); ++i) value.data()[i] = binio::get<double>(in);
    params.add(std::move(name), std::move(value));
  }
  const auto aliases = binio::get<std::uint64_t>(in);
  for (std::uint64_t n = 0; n < aliases; ++n) {
    std::string name = binio::get_string(in);
    const std::string target = binio::get_string(in);
    const bool transposed = binio::get<std::uint8_t>(in) != 0;
    params.alias(std::move(name), params.ref(target), transposed);
  }
  return params;
}

}  // namespace miverify::nn
