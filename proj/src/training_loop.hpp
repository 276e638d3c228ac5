// Copyright 2026 The fewbase Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fewbase/classifiers.hpp"

namespace fewbase::detail {

/// Seeded per-epoch reshuffle, mini-batches, cosine schedule over all steps,
/// full-batch loss after every epoch.
///
/// `batch_step(rows, lr)` computes gradients on the given rows and applies
/// one optimizer step; `full_loss()` evaluates the training loss.
template <typename BatchStep, typename FullLoss>
void run_minibatch_epochs(std::size_t n, const TrainConfig& config, TrainLog* log,
                          BatchStep&& batch_step, FullLoss&& full_loss) {
  if (config.epochs < 0) throw Error(ErrorCode::kConfig, "epochs", "must be >= 0");
  if (config.learning_rate < 0.0) throw Error(ErrorCode::kConfig, "learning_rate", "must be >= 0");
  const std::size_t batch =
      config.batch_size <= 0 ? n : std::min<std::size_t>(n, static_cast<std::size_t>(config.batch_size));
  const std::size_t per_epoch = (n + batch - 1) / batch;
  const std::size_t total = per_epoch * static_cast<std::size_t>(config.epochs);

  auto record = [&](int epoch) {
    const double loss = full_loss();
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kDivergence, "epoch " + std::to_string(epoch), "training loss is not finite");
    }
    if (log != nullptr) log->epoch_loss.push_back(loss);
  };
  if (log != nullptr) log->rows_used = n;
  record(0);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(split_seed(config.seed, static_cast<std::uint64_t>(epoch) + 1));
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch, ++step) {
      const std::size_t stop = std::min(n, start + batch);
      const double lr = cosine_learning_rate(config.learning_rate, step, total);
      batch_step(std::span<const std::size_t>(order.data() + start, stop - start), lr);
    }
    record(epoch + 1);
  }
  if (log != nullptr) log->steps = step;
}

inline Matrix gather_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

inline std::vector<int> gather_labels(std::span<const int> labels, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto r : rows) out.push_back(labels[r]);
  return out;
}

}  // namespace fewbase::detail
