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

#include <vector>

#include <Eigen/Core>

#include "miverify/nn/parameters.hpp"

namespace miverify::nn {

// LSTM with gate columns laid out [input | forget | output | candidate]:
//   z = x Wx + h Wh + b,  c' = f*c + i*g,  h' = o*tanh(c').
// Wx is [d_in x 4h], Wh is [h x 4h], b is [1 x 4h].

struct LstmStepCache {
  Matrix x;
  Matrix h_prev;
  Matrix c_prev;
  Matrix i, f, o, g;
  Matrix tanh_c;
  Eigen::VectorXd mask;
};

struct LstmCache {
  std::vector<LstmStepCache> steps;
};

// Runs a batch of sequences in lockstep. inputs[t] is [B x d_in]; masks[t]
// holds 1 for rows whose sequence is still active at step t and 0 after it
// ended, in which case the row's state is carried through unchanged. An empty
// `masks` means every row is active at every step. Returns the final hidden
// state [B x h]; the initial state is zero.
Matrix lstm_batch_forward(const std::vector<Matrix>& inputs,
                          const std::vector<Eigen::VectorXd>& masks, const Matrix& wx,
                          const Matrix& wh, const Matrix& b, LstmCache* cache);

// Backpropagation through time from dL/dh_final. Accumulates weight
// gradients and returns dL/dinputs[t] for every step.
std::vector<Matrix> lstm_batch_backward(const LstmCache& cache, const Matrix& dh_final,
                                        const Matrix& wx, const Matrix& wh, Matrix& dwx,
                                        Matrix& dwh, Matrix& db);

// Single sequence [T x d_in] -> final hidden state [1 x h]. Throws on T = 0.
Matrix lstm_sequence_forward(const Matrix& inputs, const Matrix& wx, const Matrix& wh,
                             const Matrix& b);

}  // namespace miverify::nn
