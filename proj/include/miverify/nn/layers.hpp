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

#include <Eigen/Core>

#include "miverify/nn/parameters.hpp"

namespace miverify::nn {

enum class Activation { kLinear, kRelu, kTanh, kSigmoid };

std::string_view to_string(Activation act);
Activation parse_activation(std::string_view name);

void apply_activation(Matrix& z, Activation act);

// Gradient w.r.t. the pre-activation, expressed through the activation
// output `y` (all four activations allow this).
Matrix activation_backward(const Matrix& dy, const Matrix& y, Activation act);

// y = act(x W + b) with x [n x d_in], W [d_in x d_out], b [1 x d_out].
Matrix affine_forward(const Matrix& x, const Matrix& w, const Matrix& b, Activation act);

// Backward of affine_forward given the forward input `x` and output `y`.
// Accumulates into dw and db and returns dL/dx.
Matrix affine_backward(const Matrix& dy, const Matrix& x, const Matrix& w, const Matrix& y,
                       Activation act, Matrix& dw, Matrix& db);

// Affine layer whose weight lives in a ParameterSet, possibly as a
// transposed alias of another layer's weight.
struct AffineLayer {
  ParamRef weight;
  ParamRef bias;
  Activation act = Activation::kLinear;

  Matrix forward(const ParameterSet& params, const Matrix& x) const;
  Matrix backward(ParameterSet& params, const Matrix& x, const Matrix& y, const Matrix& dy) const;
};

// Mean of squared differences over all elements. If `grad` is non-null it
// receives 2 (pred - target) / count.
double mse_loss(const Matrix& pred, const Matrix& target, Matrix* grad = nullptr);

// Per-row mean squared error.
Eigen::VectorXd row_mse(const Matrix& pred, const Matrix& target);

// max(0, margin - s_pos + s_neg).
double hinge_rank_loss(double s_pos, double s_neg, double margin);

// Rows scaled to unit L2 norm. `norms` receives the pre-normalization norms,
// floored at 1e-12 so a zero row maps to zero instead of NaN.
Matrix normalize_rows(const Matrix& v, Eigen::VectorXd& norms);
Matrix normalize_rows_backward(const Matrix& du, const Matrix& u, const Eigen::VectorXd& norms);

}  // namespace miverify::nn
