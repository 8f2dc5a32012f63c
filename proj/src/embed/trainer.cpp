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

#include "miverify/embed/trainer.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "miverify/errors.hpp"
#include "miverify/rng.hpp"

namespace miverify::embed {

namespace {

bool parameters_finite(const nn::ParameterSet& params) {
  for (const auto& p : params.parameters()) {
    if (!p.value.allFinite()) return false;
  }
  return true;
}

}  // namespace

std::vector<double> run_training(nn::ParameterSet& params, std::size_t n_examples,
                                 const TrainConfig& config, std::size_t min_batch,
                                 const BatchLoss& batch_loss,
                                 const ValidationLoss& validation_loss) {
  if (config.epochs < 0) throw ConfigError("epochs must be non-negative");
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (n_examples == 0) throw ValidationError("cannot train on an empty dataset");

  nn::AdamState adam(params, config.adam);
  Rng rng(derive_seed(config.seed, "minibatch-order"));
  std::vector<std::size_t> order(n_examples);
  std::iota(order.begin(), order.end(), 0);

  const bool early_stop = validation_loss && config.patience > 0;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<nn::Matrix> best;
  int since_best = 0;

  std::vector<double> history;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < n_examples; start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, n_examples - start);
      if (len < min_batch) continue;
      params.zero_grad();
      const double loss = batch_loss(std::span<const std::size_t>(order).subspan(start, len), true);
      if (!std::isfinite(loss)) throw DivergenceError(epoch, "training loss is not finite");
      nn::adam_step(params, adam);
      total += loss * static_cast<double>(len);
      seen += len;
    }
    if (!parameters_finite(params)) throw DivergenceError(epoch, "parameters became non-finite");
    history.push_back(seen ? total / static_cast<double>(seen) : 0.0);

    if (early_stop) {
      const double v = validation_loss();
      if (!std::isfinite(v)) throw DivergenceError(epoch, "validation loss is not finite");
      if (v < best_val) {
        best_val = v;
        best = params.snapshot();
        since_best = 0;
      } else if (++since_best >= config.patience) {
        break;
      }
    }
  }
  if (early_stop && !best.empty()) params.restore(best);
  return history;
}

}  // namespace miverify::embed
