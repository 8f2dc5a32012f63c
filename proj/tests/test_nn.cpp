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

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "miverify/errors.hpp"
#include "miverify/nn/gradcheck.hpp"
#include "miverify/nn/layers.hpp"
#include "miverify/nn/lstm.hpp"
#include "miverify/nn/parameters.hpp"
#include "miverify/nn/serialize.hpp"
#include "miverify/rng.hpp"

namespace miverify::nn {
namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

Matrix mat(Eigen::Index r, Eigen::Index c, std::initializer_list<double> v) {
  Matrix m(r, c);
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

TEST(Affine, Examples) {
  EXPECT_TRUE(affine_forward(Matrix::Zero(1, 2), Matrix::Ones(2, 3), Matrix::Zero(1, 3),
                             Activation::kRelu)
                  .isZero());
  EXPECT_EQ(affine_forward(mat(1, 2, {1, 0}), Matrix::Identity(2, 2), Matrix::Zero(1, 2),
                           Activation::kLinear),
            mat(1, 2, {1, 0}));
  EXPECT_DOUBLE_EQ(
      affine_forward(mat(1, 2, {1, 2}), mat(2, 1, {2, 1}), mat(1, 1, {0}), Activation::kLinear)(0, 0),
      4.0);
}

TEST(Affine, ShapeMismatchThrows) {
  EXPECT_THROW(affine_forward(Matrix::Zero(1, 3), Matrix::Zero(2, 2), Matrix::Zero(1, 2),
                              Activation::kLinear),
               ShapeError);
  EXPECT_THROW(affine_forward(Matrix::Zero(1, 2), Matrix::Zero(2, 2), Matrix::Zero(1, 3),
                              Activation::kLinear),
               ShapeError);
}

TEST(Affine, ActivationRanges) {
  Rng rng(1);
  const Matrix x = random_matrix(20, 5, rng, 4.0);
  const Matrix w = random_matrix(5, 6, rng);
  const Matrix b = random_matrix(1, 6, rng);
  EXPECT_GE(affine_forward(x, w, b, Activation::kRelu).minCoeff(), 0.0);
  const Matrix t = affine_forward(x, w, b, Activation::kTanh);
  EXPECT_LE(t.cwiseAbs().maxCoeff(), 1.0);
  const Matrix s = affine_forward(x, w, b, Activation::kSigmoid);
  EXPECT_GE(s.minCoeff(), 0.0);
  EXPECT_LE(s.maxCoeff(), 1.0);
  EXPECT_TRUE(s.allFinite());
}

TEST(Affine, GradientsEveryActivation) {
  for (auto act : {Activation::kLinear, Activation::kRelu, Activation::kTanh, Activation::kSigmoid}) {
    Rng rng(7);
    ParameterSet ps;
    const auto w = ps.add("w", random_matrix(4, 3, rng));
    const auto b = ps.add("b", random_matrix(1, 3, rng));
    const auto xin = ps.add("x", random_matrix(5, 4, rng));
    const Matrix r = random_matrix(5, 3, rng);
    AffineLayer layer{w, b, act};
    auto loss = [&](bool grad) {
      const Matrix& x = ps[xin].value;
      const Matrix y = layer.forward(ps, x);
      if (grad) ps.accumulate(xin, layer.backward(ps, x, y, r));
      return y.cwiseProduct(r).sum();
    };
    EXPECT_LT(finite_diff_grad_check(ps, loss), 1e-6) << to_string(act);
  }
}

TEST(Losses, MseExamples) {
  EXPECT_EQ(mse_loss(mat(1, 2, {3, 4}), mat(1, 2, {3, 4})), 0.0);
  EXPECT_DOUBLE_EQ(mse_loss(mat(1, 2, {0, 0}), mat(1, 2, {1, 1})), 1.0);
  EXPECT_THROW(mse_loss(Matrix::Zero(1, 2), Matrix::Zero(2, 1)), ShapeError);
}

TEST(Losses, MseGradient) {
  Rng rng(3);
  ParameterSet ps;
  const auto p = ps.add("pred", random_matrix(3, 4, rng));
  const Matrix target = random_matrix(3, 4, rng);
  auto loss = [&](bool grad) {
    Matrix g;
    const double l = mse_loss(ps[p].value, target, grad ? &g : nullptr);
    if (grad) ps.accumulate(p, g);
    return l;
  };
  EXPECT_LT(finite_diff_grad_check(ps, loss), 1e-8);
}

TEST(Losses, HingeExamples) {
  EXPECT_EQ(hinge_rank_loss(1.0, 0.0, 0.2), 0.0);
  EXPECT_NEAR(hinge_rank_loss(0.3, 0.3, 0.2), 0.2, 1e-15);
  EXPECT_NEAR(hinge_rank_loss(0.0, 0.5, 0.2), 0.7, 1e-15);
}

TEST(Losses, NormalizeRowsGradientAndZeroRow) {
  Rng rng(4);
  ParameterSet ps;
  const auto v = ps.add("v", random_matrix(4, 3, rng));
  const Matrix r = random_matrix(4, 3, rng);
  auto loss = [&](bool grad) {
    Eigen::VectorXd norms;
    const Matrix u = normalize_rows(ps[v].value, norms);
    if (grad) ps.accumulate(v, normalize_rows_backward(r, u, norms));
    return u.cwiseProduct(r).sum();
  };
  EXPECT_LT(finite_diff_grad_check(ps, loss), 1e-6);
  Eigen::VectorXd norms;
  const Matrix z = normalize_rows(Matrix::Zero(2, 3), norms);
  EXPECT_TRUE(z.allFinite());
  EXPECT_TRUE(z.isZero());
}

TEST(Adam, ClosedFormFirstStep) {
  ParameterSet ps;
  const auto p = ps.add("theta", Matrix::Zero(1, 1));
  ps[p].grad(0, 0) = 0.5;
  AdamState st(ps);
  adam_step(ps, st);
  EXPECT_EQ(st.t, 1u);
  EXPECT_NEAR(ps[p].value(0, 0), -1e-3 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(ps[p].value(0, 0), -9.99e-4, 2e-6);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Rng rng(2);
  ParameterSet ps;
  const auto p = ps.add("w", random_matrix(3, 3, rng));
  const Matrix before = ps[p].value;
  AdamState st(ps);
  for (int i = 0; i < 5; ++i) adam_step(ps, st);
  EXPECT_EQ(ps[p].value, before);
}

TEST(Adam, IdenticalRunsIdenticalTrajectories) {
  auto run = [] {
    ParameterSet ps;
    const auto p = ps.add("w", xavier_uniform(4, 4, 99));
    const Matrix target = xavier_uniform(4, 4, 5);
    AdamState st(ps);
    for (int i = 0; i < 50; ++i) {
      ps.zero_grad();
      Matrix g;
      mse_loss(ps[p].value, target, &g);
      ps.accumulate(p, g);
      adam_step(ps, st);
    }
    return ps[p].value;
  };
  EXPECT_EQ(run(), run());
}

TEST(Parameters, XavierBounds) {
  const Matrix w = xavier_uniform(30, 20, 1);
  EXPECT_LE(w.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 50.0));
  EXPECT_EQ(w, xavier_uniform(30, 20, 1));
  EXPECT_NE(w, xavier_uniform(30, 20, 2));
}

TEST(Parameters, TiedGradientIsSumOfUseSites) {
  Rng rng(5);
  ParameterSet ps;
  const auto w = ps.add("w", random_matrix(4, 3, rng));
  const auto b1 = ps.add("b1", Matrix::Zero(1, 3));
  const auto b2 = ps.add("b2", Matrix::Zero(1, 4));
  const auto wt = ps.alias("w.t", w, true);
  EXPECT_EQ(ps.scalar_count(), 12u + 3u + 4u);
  const Matrix x = random_matrix(2, 4, rng);
  const Matrix y = random_matrix(2, 3, rng);
  const Matrix r1 = random_matrix(2, 3, rng);
  const Matrix r2 = random_matrix(2, 4, rng);
  AffineLayer a{w, b1, Activation::kTanh};
  AffineLayer bt{wt, b2, Activation::kTanh};

  auto site_grad = [&](bool first, bool second) {
    ps.zero_grad();
    if (first) a.backward(ps, x, a.forward(ps, x), r1);
    if (second) bt.backward(ps, y, bt.forward(ps, y), r2);
    return Matrix(ps[w].grad);
  };
  const Matrix g1 = site_grad(true, false);
  const Matrix g2 = site_grad(false, true);
  const Matrix both = site_grad(true, true);
  EXPECT_LT((both - (g1 + g2)).cwiseAbs().maxCoeff(), 1e-14);

  auto loss = [&](bool grad) {
    const Matrix ya = a.forward(ps, x);
    const Matrix yb = bt.forward(ps, y);
    if (grad) {
      a.backward(ps, x, ya, r1);
      bt.backward(ps, y, yb, r2);
    }
    return ya.cwiseProduct(r1).sum() + yb.cwiseProduct(r2).sum();
  };
  EXPECT_LT(finite_diff_grad_check(ps, loss), 1e-6);
  // Perturbing the shared storage moves both use sites.
  const Matrix before = bt.forward(ps, y);
  ps[w].value(0, 0) += 0.5;
  EXPECT_NE(bt.forward(ps, y), before);
  EXPECT_EQ(ps.value(wt), ps[w].value.transpose());
}

TEST(GradCheck, LinearLossIsExact) {
  Rng rng(8);
  ParameterSet ps;
  const auto p = ps.add("p", random_matrix(5, 5, rng));
  const Matrix c = random_matrix(5, 5, rng);
  auto loss = [&](bool grad) {
    if (grad) ps.accumulate(p, c);
    return ps[p].value.cwiseProduct(c).sum();
  };
  EXPECT_LT(finite_diff_grad_check(ps, loss), 1e-9);
}

TEST(GradCheck, CorruptedBackwardIsCaught) {
  Rng rng(9);
  ParameterSet ps;
  const auto p = ps.add("p", random_matrix(3, 3, rng));
  auto loss = [&](bool grad) {
    const Matrix& v = ps[p].value;
    if (grad) ps.accumulate(p, 2.0 * v * 1.1);  // 10% too large
    return v.squaredNorm();
  };
  EXPECT_GT(finite_diff_grad_check(ps, loss), 1e-2);
}

TEST(GradCheck, KinkIsSkippedOnlyWhenAsked) {
  ParameterSet ps;
  const auto p = ps.add("p", Matrix::Constant(1, 2, 1e-4));
  ps[p].value(0, 1) = 0.7;
  // |x| with the subgradient sign(x); x = 1e-4 lies inside the stencil.
  auto loss = [&](bool grad) {
    const Matrix& v = ps[p].value;
    if (grad) ps.accumulate(p, v.array().sign().matrix());
    return v.cwiseAbs().sum();
  };
  EXPECT_GT(finite_diff_grad_check(ps, loss), 1e-2);
  GradCheckOptions opt;
  opt.skip_kinks = true;
  const auto r = grad_check_report(ps, loss, opt);
  EXPECT_EQ(r.kinks, 1u);
  EXPECT_EQ(r.checked, 1u);
  EXPECT_LT(r.max_rel_error, 1e-9);
}

TEST(GradCheck, KinkSkippingStillCatchesWrongGradients) {
  Rng rng(11);
  ParameterSet ps;
  const auto p = ps.add("p", random_matrix(3, 3, rng));
  auto loss = [&](bool grad) {
    const Matrix& v = ps[p].value;
    if (grad) ps.accumulate(p, 2.0 * v * 1.1);
    return v.squaredNorm();
  };
  GradCheckOptions opt;
  opt.skip_kinks = true;
  const auto r = grad_check_report(ps, loss, opt);
  EXPECT_EQ(r.kinks, 0u);
  EXPECT_GT(r.max_rel_error, 1e-2);
}

TEST(GradCheck, NonFiniteLossThrows) {
  ParameterSet ps;
  ps.add("p", Matrix::Ones(1, 1));
  auto loss = [&](bool) { return std::nan(""); };
  EXPECT_THROW(finite_diff_grad_check(ps, loss), Error);
}

TEST(GradCheck, RestoresParameters) {
  Rng rng(10);
  ParameterSet ps;
  const auto p = ps.add("p", random_matrix(4, 4, rng));
  const Matrix before = ps[p].value;
  auto loss = [&](bool grad) {
    if (grad) ps.accumulate(p, 3.0 * ps[p].value.cwiseAbs2());
    return ps[p].value.array().cube().sum();
  };
  finite_diff_grad_check(ps, loss);
  EXPECT_EQ(ps[p].value, before);
}

TEST(Lstm, ZeroWeightsZeroInputsGiveZero) {
  const Matrix h = lstm_sequence_forward(Matrix::Zero(3, 2), Matrix::Zero(2, 16),
                                         Matrix::Zero(4, 16), Matrix::Zero(1, 16));
  EXPECT_TRUE(h.isZero());
  EXPECT_EQ(h.cols(), 4);
}

TEST(Lstm, OneStepByHand) {
  const double x = 0.7;
  const Matrix wx = mat(1, 4, {0.5, -0.3, 0.8, 1.2});
  const Matrix wh = mat(1, 4, {0.1, 0.2, 0.3, 0.4});
  const Matrix b = mat(1, 4, {0.05, 1.0, -0.1, 0.2});
  const double i = sigmoid(0.5 * x + 0.05);
  const double o = sigmoid(0.8 * x - 0.1);
  const double g = std::tanh(1.2 * x + 0.2);
  const double c = i * g;  // c_prev = 0, so the forget gate drops out
  const double h = o * std::tanh(c);
  const Matrix out = lstm_sequence_forward(mat(1, 1, {x}), wx, wh, b);
  EXPECT_NEAR(out(0, 0), h, 1e-15);

  // Second step uses h and c from the first.
  const double x2 = -0.4;
  const double i2 = sigmoid(0.5 * x2 + 0.1 * h + 0.05);
  const double f2 = sigmoid(-0.3 * x2 + 0.2 * h + 1.0);
  const double o2 = sigmoid(0.8 * x2 + 0.3 * h - 0.1);
  const double g2 = std::tanh(1.2 * x2 + 0.4 * h + 0.2);
  const double c2 = f2 * c + i2 * g2;
  EXPECT_NEAR(lstm_sequence_forward(mat(2, 1, {x, x2}), wx, wh, b)(0, 0), o2 * std::tanh(c2),
              1e-15);
}

TEST(Lstm, EmptySequenceThrows) {
  EXPECT_THROW(lstm_sequence_forward(Matrix::Zero(0, 2), Matrix::Zero(2, 4), Matrix::Zero(1, 4),
                                     Matrix::Zero(1, 4)),
               ShapeError);
}

TEST(Lstm, MaskedBatchMatchesSingleSequences) {
  Rng rng(11);
  const int d = 3, h = 4;
  const Matrix wx = random_matrix(d, 4 * h, rng, 0.5);
  const Matrix wh = random_matrix(h, 4 * h, rng, 0.5);
  const Matrix b = random_matrix(1, 4 * h, rng, 0.1);
  const std::vector<int> lengths{1, 4, 2};
  std::vector<Matrix> seqs;
  for (int len : lengths) seqs.push_back(random_matrix(len, d, rng));
  std::vector<Matrix> inputs(4, Matrix::Zero(3, d));
  std::vector<Eigen::VectorXd> masks(4, Eigen::VectorXd::Zero(3));
  for (int t = 0; t < 4; ++t) {
    for (int s = 0; s < 3; ++s) {
      if (t < lengths[s]) {
        inputs[t].row(s) = seqs[s].row(t);
        masks[t](s) = 1.0;
      }
    }
  }
  const Matrix batched = lstm_batch_forward(inputs, masks, wx, wh, b, nullptr);
  for (int s = 0; s < 3; ++s) {
    const Matrix single = lstm_sequence_forward(seqs[s], wx, wh, b);
    EXPECT_LT((batched.row(s) - single.row(0)).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Lstm, GradientThreeStepsFourUnits) {
  Rng rng(12);
  const int d = 3, h = 4, batch = 2, steps = 3;
  ParameterSet ps;
  const auto wx = ps.add("wx", random_matrix(d, 4 * h, rng, 0.5));
  const auto wh = ps.add("wh", random_matrix(h, 4 * h, rng, 0.5));
  const auto b = ps.add("b", random_matrix(1, 4 * h, rng, 0.2));
  std::vector<ParamRef> xs;
  for (int t = 0; t < steps; ++t) xs.push_back(ps.add("x" + std::to_string(t), random_matrix(batch, d, rng)));
  const Matrix r = random_matrix(batch, h, rng);
  std::vector<Eigen::VectorXd> masks(steps, Eigen::VectorXd::Ones(batch));
  masks[2](1) = 0.0;  // second sequence ends after two steps

  auto loss = [&](bool grad) {
    std::vector<Matrix> inputs;
    for (auto x : xs) inputs.push_back(ps[x].value);
    LstmCache cache;
    const Matrix hT = lstm_batch_forward(inputs, masks, ps[wx].value, ps[wh].value, ps[b].value,
                                         grad ? &cache : nullptr);
    if (grad) {
      const auto dx = lstm_batch_backward(cache, r, ps[wx].value, ps[wh].value, ps[wx].grad,
                                          ps[wh].grad, ps[b].grad);
      for (int t = 0; t < steps; ++t) ps.accumulate(xs[t], dx[t]);
    }
    return hT.cwiseProduct(r).sum();
  };
  EXPECT_LT(finite_diff_grad_check(ps, loss, {3e-4, 400, 3}), 1e-6);
}

TEST(Serialize, RoundTripWithAliases) {
  ParameterSet ps;
  const auto a = ps.add("layer.w", xavier_uniform(3, 5, 1));
  ps.add("layer.b", xavier_uniform(1, 5, 2));
  ps.alias("other.w", a, true);
  std::stringstream buf;
  write_parameters(ps, buf);
  EXPECT_EQ(buf.str().substr(0, 6), "MIVNN1");
  const ParameterSet back = read_parameters(buf);
  EXPECT_TRUE(back == ps);
  EXPECT_EQ(back.value(back.ref("other.w")), ps[a].value.transpose());
}

TEST(Serialize, BadMagicAndTruncation) {
  std::stringstream bad("NOTNN1xxxx");
  EXPECT_THROW(read_parameters(bad), FormatError);
  ParameterSet ps;
  ps.add("w", xavier_uniform(4, 4, 3));
  std::stringstream buf;
  write_parameters(ps, buf);
  std::string s = buf.str();
  std::stringstream cut(s.substr(0, s.size() - 20));
  EXPECT_THROW(read_parameters(cut), FormatError);
}

}  // namespace
}  // namespace miverify::nn
