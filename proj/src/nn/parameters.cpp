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

#include "miverify/nn/parameters.hpp"

#include <cmath>

#include "miverify/errors.hpp"
#include "miverify/rng.hpp"

namespace miverify::nn {

ParamRef ParameterSet::add(std::string name, Matrix init) {
  for (const auto& p : params_) {
    if (p.name == name) throw ConfigError("duplicate parameter name '" + name + "'");
  }
  for (const auto& a : aliases_) {
    if (a.name == name) throw ConfigError("duplicate parameter name '" + name + "'");
  }
  Matrix grad = Matrix::Zero(init.rows(), init.cols());
  params_.push_back({std::move(name), std::move(init), std::move(grad)});
  return {params_.size() - 1, false};
}

ParamRef ParameterSet::alias(std::string name, ParamRef target, bool transposed) {
  if (target.index >= params_.size()) throw ConfigError("alias target out of range");
  for (const auto& p : params_) {
    if (p.name == name) throw ConfigError("duplicate parameter name '" + name + "'");
  }
  const bool t = transposed != target.transposed;
  aliases_.push_back({std::move(name), target.index, t});
  return {target.index, t};
}

ParamRef ParameterSet::ref(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return {i, false};
  }
  for (const auto& a : aliases_) {
    if (a.name == name) return {a.target, a.transposed};
  }
  throw ConfigError("unknown parameter '" + name + "'");
}

Matrix ParameterSet::value(ParamRef r) const {
  const Matrix& v = params_[r.index].value;
  if (r.transposed) return v.transpose();
  return v;
}

void ParameterSet::accumulate(ParamRef r, const Matrix& g) {
  Matrix& grad = params_[r.index].grad;
  if (r.transposed) {
    grad.noalias() += g.transpose();
  } else {
    grad.noalias() += g;
  }
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

std::vector<Matrix> ParameterSet::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void ParameterSet::restore(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) throw ShapeError("snapshot size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) params_[i].value = values[i];
}

bool ParameterSet::operator==(const ParameterSet& other) const {
  if (params_.size() != other.params_.size() || aliases_.size() != other.aliases_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name != other.params_[i].name || params_[i].value != other.params_[i].value) {
      return false;
    }
  }
  for (std::size_t i = 0; i < aliases_.size(); ++i) {
    const auto& a = aliases_[i];
    const auto& b = other.aliases_[i];
    if (a.name != b.name || a.target != b.target || a.transposed != b.transposed) return false;
  }
  return true;
}

Matrix xavier_uniform(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
  return m;
}

AdamState::AdamState(const ParameterSet& params, AdamConfig cfg) : config(cfg) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const auto& p : params.parameters()) {
    m.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    v.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
}

void adam_step(ParameterSet& params, AdamState& state) {
  if (state.m.size() != params.size()) throw ShapeError("Adam state does not match parameters");
  const AdamConfig& c = state.config;
  ++state.t;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    m = c.beta1 * m + (1.0 - c.beta1) * p.grad;
    v = c.beta2 * v + (1.0 - c.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= c.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
  }
}

}  // namespace miverify::nn
