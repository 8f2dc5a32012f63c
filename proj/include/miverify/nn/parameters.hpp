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
#include <string>
#include <vector>

#include <Eigen/Core>

namespace miverify::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

// Reference to a parameter as a layer sees it. A transposed reference reads
// value^T and accumulates its gradient transposed into the shared buffer, so
// tied weights sum the contributions of every use site.
struct ParamRef {
  std::size_t index = 0;
  bool transposed = false;
};

class ParameterSet {
 public:
  struct Alias {
    std::string name;
    std::size_t target;
    bool transposed;
  };

  // Adds a parameter with a zeroed gradient buffer. Names must be unique
  // across parameters and aliases.
  ParamRef add(std::string name, Matrix init);

  // Registers `name` as a view of an existing parameter.
  ParamRef alias(std::string name, ParamRef target, bool transposed);

  ParamRef ref(const std::string& name) const;

  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  Parameter& operator[](ParamRef r) { return params_[r.index]; }
  const Parameter& operator[](ParamRef r) const { return params_[r.index]; }

  // Effective value seen through the reference (copies when transposed).
  Matrix value(ParamRef r) const;

  // grad += g, where g has the shape of the referenced view.
  void accumulate(ParamRef r, const Matrix& g);

  std::size_t size() const { return params_.size(); }
  const std::vector<Parameter>& parameters() const { return params_; }
  const std::vector<Alias>& aliases() const { return aliases_; }

  // Scalar count over distinct storage; aliases are not double counted.
  std::size_t scalar_count() const;

  void zero_grad();

  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);

  bool operator==(const ParameterSet& other) const;

 private:
  std::vector<Parameter> params_;
  std::vector<Alias> aliases_;
};

// Xavier/Glorot uniform matrix in [-sqrt(6/(fan_in+fan_out)), +...].
Matrix xavier_uniform(std::size_t rows, std::size_t cols, std::uint64_t seed);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t t = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;

  AdamState(const ParameterSet& params, AdamConfig cfg = {});
};

// Bias-corrected Adam update of every parameter from its gradient buffer.
void adam_step(ParameterSet& params, AdamState& state);

}  // namespace miverify::nn
