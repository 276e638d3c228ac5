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

#include "fewbase/adapters.hpp"

#include <algorithm>
#include <cmath>

#include "training_loop.hpp"

namespace fewbase {

AdapterMode parse_adapter_mode(const std::string& name) {
  if (name == "identity") return AdapterMode::kIdentity;
  if (name == "square") return AdapterMode::kSquare;
  if (name == "square_residual") return AdapterMode::kSquareResidual;
  if (name == "projection") return AdapterMode::kProjection;
  if (name == "stats_only") return AdapterMode::kStatsOnly;
  throw Error(ErrorCode::kConfig, "mode", "unknown adapter mode '" + name + "'");
}

std::string adapter_mode_name(AdapterMode mode) {
  switch (mode) {
    case AdapterMode::kIdentity: return "identity";
    case AdapterMode::kSquare: return "square";
    case AdapterMode::kSquareResidual: return "square_residual";
    case AdapterMode::kProjection: return "projection";
    case AdapterMode::kStatsOnly: return "stats_only";
  }
  return "identity";
}

std::size_t AdapterModel::input_dim() const {
  if (transform.size() > 0) return static_cast<std::size_t>(transform.cols());
  if (stats) return static_cast<std::size_t>(stats->mean.size());
  return 0;  // any width
}

std::size_t AdapterModel::output_dim() const {
  if (transform.size() > 0) return static_cast<std::size_t>(transform.rows());
  return input_dim();
}

AdapterModel make_adapter(AdapterMode mode, std::size_t dim, std::uint64_t seed, std::size_t projection_dim) {
  AdapterModel a;
  a.mode = mode;
  const auto d = static_cast<Eigen::Index>(dim);
  switch (mode) {
    case AdapterMode::kIdentity:
    case AdapterMode::kStatsOnly:
      break;
    case AdapterMode::kSquareResidual:
      a.transform = Matrix::Zero(d, d);
      a.bias = Vector::Zero(d);
      break;
    case AdapterMode::kSquare:
    case AdapterMode::kProjection: {
      const auto out = mode == AdapterMode::kSquare ? d
                                                    : static_cast<Eigen::Index>(projection_dim > 0 ? projection_dim
                                                                                                   : std::max<std::size_t>(1, dim / 2));
      if (out > d) throw Error(ErrorCode::kConfig, "projection_dim", "projection width must be <= d");
      Rng rng(seed);
      const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
      a.transform.resize(out, d);
      for (Eigen::Index i = 0; i < a.transform.size(); ++i) a.transform.data()[i] = rng.uniform(-bound, bound);
      a.bias = Vector::Zero(out);
      break;
    }
  }
  return a;
}

namespace {

Matrix linear_part(const AdapterModel& adapter, const Matrix& x) {
  Matrix y = x * adapter.transform.transpose();
  y.rowwise() += adapter.bias.transpose();
  return y;
}

}  // namespace

Matrix apply_adapter(const AdapterModel& adapter, const Matrix& x) {
  const auto in = adapter.input_dim();
  if (in != 0 && static_cast<std::size_t>(x.cols()) != in) {
    throw Error(ErrorCode::kDimensionMismatch, "x",
                "adapter expects " + std::to_string(in) + " columns, got " + std::to_string(x.cols()));
  }
  const Matrix xs = adapter.stats ? adapter.stats->apply(x) : x;
  switch (adapter.mode) {
    case AdapterMode::kIdentity:
    case AdapterMode::kStatsOnly:
      return xs;
    case AdapterMode::kSquareResidual:
      return xs + linear_part(adapter, xs);
    case AdapterMode::kSquare:
    case AdapterMode::kProjection:
      return linear_part(adapter, xs);
  }
  return xs;
}

FinetuneConfig FinetuneConfig::support_defaults() {
  FinetuneConfig c;
  c.step1.learning_rate = 1e-2;
  c.step1.epochs = 100;
  c.step1.batch_size = 0;
  c.step2.batch_size = 0;
  return c;
}

FinetuneResult finetune_rows(const Matrix& x, std::span<const int> labels, int classes, AdapterMode mode,
                             const FinetuneConfig& config, std::optional<StandardizationStats> stats) {
  if (x.rows() == 0) throw Error(ErrorCode::kEmptySelection, "subset", "no training rows");
  if (mode == AdapterMode::kStatsOnly && !stats) {
    throw Error(ErrorCode::kConfig, "stats", "stats_only mode needs standardization statistics");
  }
  FinetuneResult result;
  result.rows_used = static_cast<std::size_t>(x.rows());
  result.adapter = make_adapter(mode, static_cast<std::size_t>(x.cols()), split_seed(config.seed, 1),
                                config.projection_dim);
  result.adapter.stats = std::move(stats);
  const Matrix xs = result.adapter.stats ? result.adapter.stats->apply(x) : x;

  TrainConfig s1 = config.step1;
  s1.seed = split_seed(config.seed, 2);
  s1.max_examples = 0;
  const Matrix frozen = apply_adapter(result.adapter, x);
  result.head = fit_linear_head(frozen, labels, classes, s1, &result.step1_log);

  TrainConfig s2 = config.step2;
  s2.seed = split_seed(config.seed, 3);
  s2.max_examples = 0;
  if (s2.epochs <= 0) return result;

  AdapterModel& adapter = result.adapter;
  LinearHead& head = result.head;
  const bool trainable = adapter.transform.size() > 0;
  const bool residual = adapter.mode == AdapterMode::kSquareResidual;

  auto forward = [&](const Matrix& xb) {
    if (!trainable) return xb;
    Matrix f = linear_part(adapter, xb);
    if (residual) f += xb;
    return f;
  };

  Optimizer opt(s2);
  detail::run_minibatch_epochs(
      static_cast<std::size_t>(xs.rows()), s2, &result.step2_log,
      [&](std::span<const std::size_t> rows, double lr) {
        const Matrix xb = detail::gather_rows(xs, rows);
        const auto yb = detail::gather_labels(labels, rows);
        const auto g = cross_entropy_gradient(head, forward(xb), yb);
        std::vector<ParamBlock> blocks = {
            {head.weights.data(), g.d_weights.data(), static_cast<std::size_t>(head.weights.size()), true},
            {head.bias.data(), g.d_bias.data(), static_cast<std::size_t>(head.bias.size()), false},
        };
        Matrix d_transform;
        Vector d_bias;
        if (trainable) {
          d_transform = g.d_inputs.transpose() * xb;
          d_bias = g.d_inputs.colwise().sum().transpose();
          blocks.push_back({adapter.transform.data(), d_transform.data(),
                            static_cast<std::size_t>(adapter.transform.size()), true});
          blocks.push_back({adapter.bias.data(), d_bias.data(), static_cast<std::size_t>(adapter.bias.size()), false});
        }
        opt.step(blocks, lr);
      },
      [&] { return cross_entropy_loss(head, forward(xs), labels); });
  return result;
}

FinetuneResult finetune_two_step(const FeatureSet& base, const ClassSubset& subset, AdapterMode mode,
                                 const FinetuneConfig& config) {
  if (subset.ids.empty()) throw Error(ErrorCode::kEmptySelection, "subset", "empty class subset");
  if (config.subset_cap == 0) throw Error(ErrorCode::kConfig, "subset_cap", "must be positive");
  std::vector<int> local(base.num_classes(), -1);
  for (std::size_t k = 0; k < subset.ids.size(); ++k) {
    const int id = subset.ids[k];
    if (id < 0 || static_cast<std::size_t>(id) >= base.num_classes()) {
      throw Error(ErrorCode::kLabelOutOfRange, "subset", "class id " + std::to_string(id));
    }
    local[static_cast<std::size_t>(id)] = static_cast<int>(k);
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < base.rows(); ++i) {
    if (local[static_cast<std::size_t>(base.labels[i])] >= 0) rows.push_back(i);
  }
  if (rows.empty()) throw Error(ErrorCode::kEmptySelection, "subset", "subset classes have no rows");
  if (rows.size() > config.subset_cap) {
    Rng rng(split_seed(config.seed, 0));
    auto keep = sample_without_replacement(rng, rows.size(), config.subset_cap);
    std::sort(keep.begin(), keep.end());
    std::vector<std::size_t> capped;
    capped.reserve(keep.size());
    for (const auto k : keep) capped.push_back(rows[k]);
    rows = std::move(capped);
  }
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (const auto r : rows) labels.push_back(local[static_cast<std::size_t>(base.labels[r])]);

  std::optional<StandardizationStats> stats;
  if (mode == AdapterMode::kStatsOnly || config.standardize) stats = fit_standardization(base, subset);

  // A one-class subset still gets a two-output head so the softmax is defined.
  const int classes = std::max<int>(2, static_cast<int>(subset.ids.size()));
  return finetune_rows(base.gather(rows), labels, classes, mode, config, std::move(stats));
}

FinetuneResult finetune_on_support(const Episode& episode, AdapterMode mode, const FinetuneConfig& config,
                                   bool frozen) {
  FinetuneConfig c = config;
  if (frozen) c.step2.epochs = 0;
  std::optional<StandardizationStats> stats;
  if (mode == AdapterMode::kStatsOnly || config.standardize) {
    StandardizationStats s;
    s.mean = episode.support_features.colwise().mean().transpose();
    const Matrix centered = episode.support_features.rowwise() - s.mean.transpose();
    s.std = (centered.array().square().colwise().sum() / static_cast<double>(centered.rows()))
                .sqrt()
                .transpose()
                .cwiseMax(kStdFloor);
    stats = std::move(s);
  }
  return finetune_rows(episode.support_features, episode.support_labels, episode.ways, mode, c, std::move(stats));
}

}  // namespace fewbase
