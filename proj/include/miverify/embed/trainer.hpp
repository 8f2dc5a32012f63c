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

#include <functional>
#include <span>
#include <vector>

#include "miverify/embed/embed_model.hpp"
#include "miverify/nn/parameters.hpp"

namespace miverify::embed {

// Loss of one minibatch; accumulates gradients when `with_grad` is set.
using BatchLoss = std::function<double(std::span<const std::size_t> batch, bool with_grad)>;
using ValidationLoss = std::function<double()>;

// Shuffled-minibatch Adam loop shared by all three models. Returns the mean
// training loss of every epoch. Throws DivergenceError naming the epoch on a
// non-finite loss or parameter. With a validation loss and patience > 0, the
// best parameters seen are restored when training stops.
std::vector<double> run_training(nn::ParameterSet& params, std::size_t n_examples,
                                 const TrainConfig& config, std::size_t min_batch,
                                 const BatchLoss& batch_loss,
                                 const ValidationLoss& validation_loss = {});

}  // namespace miverify::embed
