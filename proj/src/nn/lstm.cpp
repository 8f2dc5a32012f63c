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

#include "miverify/nn/lstm.hpp"

#include "miverify/errors.hpp"

namespace miverify::nn {

namespace {

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

}  // namespace

Matrix lstm_batch_forward(const std::vector<Matrix>& inputs,
                          const std::vector<Eigen::VectorXd>& masks, const Matrix& wx,
                          const Matrix& wh, const Matrix& b, LstmCache* cache) {
  if (inputs.empty()) throw ShapeError("lstm: sequence length must be at least 1");
  if (!masks.empty() && masks.size() != inputs.size()) throw ShapeError("lstm: mask count mismatch");
  const Eigen::Index hidden = wh.rows();
  if (wh.cols() != 4 * hidden || wx.cols() != 4 * hidden || b.rows() != 1 || b.cols() != 4 * hidden) {
    throw ShapeError("lstm: weight shapes inconsistent with hidden size");
  }
  const Eigen::Index batch = inputs.front().rows();

  Matrix h = Matrix::Zero(batch, hidden);
  Matrix c = Matrix::Zero(batch, hidden);
  if (cache) cache->steps.clear();

  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const Matrix& x = inputs[t];
    if (x.rows() != batch || x.cols() != wx.rows()) throw ShapeError("lstm: input shape mismatch");
    Matrix z = x * wx;
    z.noalias() += h * wh;
    z.rowwise() += b.row(0);

    Matrix i = sigmoid(z.middleCols(0, hidden));
    Matrix f = sigmoid(z.middleCols(hidden, hidden));
    Matrix o = sigmoid(z.middleCols(2 * hidden, hidden));
    Matrix g = z.middleCols(3 * hidden, hidden).array().tanh();
    Matrix c_new = f.cwiseProduct(c) + i.cwiseProduct(g);
    Matrix tanh_c = c_new.array().tanh();
    Matrix h_new = o.cwiseProduct(tanh_c);

    Eigen::VectorXd mask = masks.empty() ? Eigen::VectorXd::Ones(batch) : masks[t];
    if (mask.size() != batch) throw ShapeError("lstm: mask length mismatch");

    if (cache) {
      cache->steps.push_back({x, h, c, std::move(i), std::move(f), std::move(o), std::move(g),
                              tanh_c, mask});
    }
    if (masks.empty()) {
      h = std::move(h_new);
      c = std::move(c_new);
    } else {
      const Eigen::VectorXd keep = Eigen::VectorXd::Ones(batch) - mask;
      h = mask.asDiagonal() * h_new + keep.asDiagonal() * h;
      c = mask.asDiagonal() * c_new + keep.asDiagonal() * c;
    }
  }
  return h;
}

std::vector<Matrix> lstm_batch_backward(const LstmCache& cache, const Matrix& dh_final,
                                        const Matrix& wx, const Matrix& wh, Matrix& dwx,
                                        Matrix& dwh, Matrix& db) {
  const Eigen::Index hidden = wh.rows();
  const std::size_t steps = cache.steps.size();
  std::vector<Matrix> dx(steps);

  Matrix dh = dh_final;
  Matrix dc = Matrix::Zero(dh.rows(), hidden);
  Matrix dz(dh.rows(), 4 * hidden);

  for (std::size_t s = steps; s-- > 0;) {
    const LstmStepCache& st = cache.steps[s];
    const Eigen::VectorXd keep = Eigen::VectorXd::Ones(st.mask.size()) - st.mask;

    const Matrix dh_new = st.mask.asDiagonal() * dh;
    Matrix dc_new = st.mask.asDiagonal() * dc;
    dc_new.array() += dh_new.array() * st.o.array() * (1.0 - st.tanh_c.array().square());

    const Matrix d_o = dh_new.cwiseProduct(st.tanh_c);
    const Matrix d_i = dc_new.cwiseProduct(st.g);
    const Matrix d_g = dc_new.cwiseProduct(st.i);
    const Matrix d_f = dc_new.cwiseProduct(st.c_prev);

    dz.middleCols(0, hidden) = d_i.array() * st.i.array() * (1.0 - st.i.array());
    dz.middleCols(hidden, hidden) = d_f.array() * st.f.array() * (1.0 - st.f.array());
    dz.middleCols(2 * hidden, hidden) = d_o.array() * st.o.array() * (1.0 - st.o.array());
    dz.middleCols(3 * hidden, hidden) = d_g.array() * (1.0 - st.g.array().square());

    dwx.noalias() += st.x.transpose() * dz;
    dwh.noalias() += st.h_prev.transpose() * dz;
    db.row(0).noalias() += dz.colwise().sum();

    dx[s] = dz * wx.transpose();
    Matrix dh_prev = dz * wh.transpose();
    dh_prev.noalias() += keep.asDiagonal() * dh;
    Matrix dc_prev = dc_new.cwiseProduct(st.f);
    dc_prev.noalias() += keep.asDiagonal() * dc;
    dh = std::move(dh_prev);
    dc = std::move(dc_prev);
  }
  return dx;
}

Matrix lstm_sequence_forward(const Matrix& inputs, const Matrix& wx, const Matrix& wh,
                             const Matrix& b) {
  if (inputs.rows() == 0) throw ShapeError("lstm: sequence length must be at least 1");
  std::vector<Matrix> steps;
  steps.reserve(inputs.rows());
  for (Eigen::Index t = 0; t < inputs.rows(); ++t) steps.emplace_back(inputs.row(t));
  return lstm_batch_forward(steps, {}, wx, wh, b, nullptr);
}

}  // namespace miverify::nn
