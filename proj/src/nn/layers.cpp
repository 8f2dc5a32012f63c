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

#include "miverify/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "miverify/errors.hpp"

namespace miverify::nn {

std::string_view to_string(Activation act) {
  switch (act) {
    case Activation::kLinear:
      return "linear";
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kSigmoid:
      return "sigmoid";
  }
  return "linear";
}

Activation parse_activation(std::string_view name) {
  if (name == "linear") return Activation::kLinear;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

void apply_activation(Matrix& z, Activation act) {
  switch (act) {
    case Activation::kLinear:
      break;
    case Activation::kRelu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::kTanh:
      z = z.array().tanh();
      break;
    case Activation::kSigmoid:
      z = (1.0 + (-z.array()).exp()).inverse();
      break;
  }
}

Matrix activation_backward(const Matrix& dy, const Matrix& y, Activation act) {
  switch (act) {
    case Activation::kLinear:
      return dy;
    case Activation::kRelu:
      return (y.array() > 0.0).select(dy, 0.0);
    case Activation::kTanh:
      return dy.array() * (1.0 - y.array().square());
    case Activation::kSigmoid:
      return dy.array() * y.array() * (1.0 - y.array());
  }
  return dy;
}

namespace {

void check_affine_shapes(const Matrix& x, Eigen::Index w_rows, Eigen::Index w_cols,
                         const Matrix& b) {
  if (x.cols() != w_rows) {
    throw ShapeError("affine: input has " + std::to_string(x.cols()) + " columns, weight expects " +
                     std::to_string(w_rows));
  }
  if (b.rows() != 1 || b.cols() != w_cols) {
    throw ShapeError("affine: bias must be 1 x " + std::to_string(w_cols));
  }
}

}  // namespace

Matrix affine_forward(const Matrix& x, const Matrix& w, const Matrix& b, Activation act) {
  check_affine_shapes(x, w.rows(), w.cols(), b);
  Matrix z = x * w;
  z.rowwise() += b.row(0);
  apply_activation(z, act);
  return z;
}

Matrix affine_backward(const Matrix& dy, const Matrix& x, const Matrix& w, const Matrix& y,
                       Activation act, Matrix& dw, Matrix& db) {
  if (dy.rows() != y.rows() || dy.cols() != y.cols()) throw ShapeError("affine: dy shape mismatch");
  const Matrix dz = activation_backward(dy, y, act);
  dw.noalias() += x.transpose() * dz;
  db.row(0).noalias() += dz.colwise().sum();
  return dz * w.transpose();
}

Matrix AffineLayer::forward(const ParameterSet& params, const Matrix& x) const {
  const Matrix& w = params[weight].value;
  const Matrix& b = params[bias].value;
  if (!weight.transposed) return affine_forward(x, w, b, act);

  check_affine_shapes(x, w.cols(), w.rows(), b);
  Matrix z = x * w.transpose();
  z.rowwise() += b.row(0);
  apply_activation(z, act);
  return z;
}

Matrix AffineLayer::backward(ParameterSet& params, const Matrix& x, const Matrix& y,
                             const Matrix& dy) const {
  const Matrix dz = activation_backward(dy, y, act);
  const Matrix& w = params[weight].value;
  params[bias].grad.row(0).noalias() += dz.colwise().sum();
  if (weight.transposed) {
    // Effective weight is w^T, so dW_eff = x^T dz and dw = dz^T x.
    params[weight].grad.noalias() += dz.transpose() * x;
    return dz * w;
  }
  params[weight].grad.noalias() += x.transpose() * dz;
  return dz * w.transpose();
}

double mse_loss(const Matrix& pred, const Matrix& target, Matrix* grad) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ShapeError("mse: shape mismatch");
  }
  const double count = static_cast<double>(pred.size());
  if (count == 0) return 0.0;
  const Matrix diff = pred - target;
  if (grad) *grad = (2.0 / count) * diff;
  return diff.squaredNorm() / count;
}

Eigen::VectorXd row_mse(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ShapeError("mse: shape mismatch");
  }
  return (pred - target).rowwise().squaredNorm() / static_cast<double>(pred.cols());
}

double hinge_rank_loss(double s_pos, double s_neg, double margin) {
  return std::max(0.0, margin - s_pos + s_neg);
}

Matrix normalize_rows(const Matrix& v, Eigen::VectorXd& norms) {
  norms = v.rowwise().norm().cwiseMax(1e-12);
  return norms.cwiseInverse().asDiagonal() * v;
}

Matrix normalize_rows_backward(const Matrix& du, const Matrix& u, const Eigen::VectorXd& norms) {
  // u = v / |v|  =>  dv = (du - u (u . du)) / |v|
  const Eigen::VectorXd proj = (du.array() * u.array()).rowwise().sum();
  Matrix dv = du - proj.asDiagonal() * u;
  return norms.cwiseInverse().asDiagonal() * dv;
}

}  // namespace miverify::nn
