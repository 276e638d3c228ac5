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

#include "fewbase/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "training_loop.hpp"

namespace fewbase {

NcmModel fit_ncm(const Matrix& features, std::span<const int> labels, int num_classes) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "labels", "label count differs from row count");
  }
  if (labels.empty()) throw Error(ErrorCode::kEmptySelection, "features", "no support rows");
  const int k = num_classes > 0 ? num_classes : *std::max_element(labels.begin(), labels.end()) + 1;
  NcmModel model;
  model.centroids = Matrix::Zero(k, features.cols());
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int label = labels[i];
    if (label < 0 || label >= k) throw Error(ErrorCode::kLabelOutOfRange, "labels", std::to_string(label));
    model.centroids.row(label) += features.row(static_cast<Eigen::Index>(i));
    ++counts[static_cast<std::size_t>(label)];
  }
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw Error(ErrorCode::kInsufficientExamples, "labels", "class " + std::to_string(c) + " has no rows");
    }
    model.centroids.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
  }
  model.class_map.resize(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) model.class_map[static_cast<std::size_t>(c)] = c;
  return model;
}

NcmPrediction predict_ncm(const NcmModel& model, const Matrix& x) {
  if (x.cols() != model.centroids.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "x",
                "expected " + std::to_string(model.centroids.cols()) + " columns, got " + std::to_string(x.cols()));
  }
  NcmPrediction out;
  const auto k = model.centroids.rows();
  out.distances.resize(x.rows(), k);
  out.labels.resize(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    int best = 0;
    double best_dist = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) {
      const double dist = (x.row(i) - model.centroids.row(c)).norm();
      out.distances(i, c) = dist;
      if (c == 0 || dist < best_dist) {
        best = static_cast<int>(c);
        best_dist = dist;
      }
    }
    out.labels[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw Error(ErrorCode::kDimensionMismatch, "labels", "length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

void preprocess_for_ncm(Matrix& support, Matrix& query, const NcmOptions& options) {
  if (options.center) {
    const RowVector mean = support.colwise().mean();
    support.rowwise() -= mean;
    query.rowwise() -= mean;
  }
  if (options.l2_normalize) {
    l2_normalize_rows(support);
    l2_normalize_rows(query);
  }
}

double ncm_accuracy(const Matrix& support, std::span<const int> support_labels, const Matrix& query,
                    std::span<const int> query_labels, const NcmOptions& options) {
  if (!options.center && !options.l2_normalize) {
    return accuracy(predict_ncm(fit_ncm(support, support_labels), query).labels, query_labels);
  }
  Matrix s = support, q = query;
  preprocess_for_ncm(s, q, options);
  return accuracy(predict_ncm(fit_ncm(s, support_labels), q).labels, query_labels);
}

Matrix LinearHead::logits(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "x",
                "head expects " + std::to_string(dim()) + " columns, got " + std::to_string(x.cols()));
  }
  Matrix z = x * weights.transpose();
  z.rowwise() += bias.transpose();
  return z;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - mx).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

Matrix predict_softmax(const LinearHead& head, const Matrix& x) { return softmax_rows(head.logits(x)); }

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd" || name == "sgd_nesterov") return OptimizerKind::kSgd;
  throw Error(ErrorCode::kConfig, "optimizer", "unknown optimizer '" + name + "'");
}

const char* optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::kAdam ? "adam" : "sgd"; }

TrainConfig TrainConfig::step1() { return TrainConfig{}; }

TrainConfig TrainConfig::step2() {
  TrainConfig c;
  c.optimizer = OptimizerKind::kSgd;
  c.momentum = 0.9;
  c.nesterov = true;
  c.epochs = 20;
  return c;
}

TrainConfig TrainConfig::logistic_regression() {
  TrainConfig c;
  c.learning_rate = 1e-2;
  c.epochs = 100;
  c.batch_size = 0;
  c.weight_decay = 1e-3;
  return c;
}

double cosine_learning_rate(double base, std::size_t step, std::size_t total_steps) {
  if (total_steps == 0) return base;
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return base * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

void Optimizer::step(std::span<const ParamBlock> blocks, double learning_rate) {
  if (first_.size() != blocks.size()) {
    first_.assign(blocks.size(), {});
    second_.assign(blocks.size(), {});
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      first_[b].assign(blocks[b].size, 0.0);
      if (config_.optimizer == OptimizerKind::kAdam) second_[b].assign(blocks[b].size, 0.0);
    }
  }
  ++t_;
  const double wd = config_.weight_decay;
  if (config_.optimizer == OptimizerKind::kAdam) {
    const double b1 = config_.adam_beta1, b2 = config_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto& blk = blocks[b];
      auto& m = first_[b];
      auto& v = second_[b];
      for (std::size_t i = 0; i < blk.size; ++i) {
        const double g = blk.grad[i] + (blk.decay ? wd * blk.value[i] : 0.0);
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        blk.value[i] -= learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.adam_eps);
      }
    }
  } else {
    const double mu = config_.momentum;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto& blk = blocks[b];
      auto& buf = first_[b];
      for (std::size_t i = 0; i < blk.size; ++i) {
        double g = blk.grad[i] + (blk.decay ? wd * blk.value[i] : 0.0);
        if (mu != 0.0) {
          buf[i] = t_ == 1 ? g : mu * buf[i] + g;
          g = config_.nesterov ? g + mu * buf[i] : buf[i];
        }
        blk.value[i] -= learning_rate * g;
      }
    }
  }
}

CrossEntropyGradient cross_entropy_gradient(const LinearHead& head, const Matrix& x, std::span<const int> labels) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "labels", "label count differs from row count");
  }
  const Matrix z = head.logits(x);
  Matrix p = softmax_rows(z);
  const auto n = static_cast<double>(x.rows());
  CrossEntropyGradient g;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || static_cast<std::size_t>(y) >= head.num_classes()) {
      throw Error(ErrorCode::kLabelOutOfRange, "labels", std::to_string(y));
    }
    const double mx = z.row(i).maxCoeff();
    const double lse = mx + std::log((z.row(i).array() - mx).exp().sum());
    g.loss += lse - z(i, y);
    p(i, y) -= 1.0;
  }
  g.loss /= n;
  p /= n;
  g.d_weights = p.transpose() * x;
  g.d_bias = p.colwise().sum().transpose();
  g.d_inputs = p * head.weights;
  return g;
}

double cross_entropy_loss(const LinearHead& head, const Matrix& x, std::span<const int> labels) {
  const Matrix z = head.logits(x);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mx = z.row(i).maxCoeff();
    loss += mx + std::log((z.row(i).array() - mx).exp().sum()) - z(i, labels[static_cast<std::size_t>(i)]);
  }
  return loss / static_cast<double>(x.rows());
}

LinearHead init_head(std::size_t classes, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  LinearHead head;
  head.weights.resize(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < head.weights.size(); ++i) head.weights.data()[i] = rng.uniform(-bound, bound);
  head.bias = Vector::Zero(static_cast<Eigen::Index>(classes));
  return head;
}

LinearHead fit_linear_head(const Matrix& x, std::span<const int> labels, int num_classes,
                           const TrainConfig& config, TrainLog* log, const LinearHead* init) {
  if (num_classes < 2) throw Error(ErrorCode::kInvalidArgument, "classes", "need at least 2 classes");
  if (static_cast<std::size_t>(x.rows()) != labels.size() || x.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "labels", "label count differs from row count");
  }
  LinearHead head = init != nullptr ? *init
                                    : init_head(static_cast<std::size_t>(num_classes),
                                                static_cast<std::size_t>(x.cols()), split_seed(config.seed, 0));
  if (head.num_classes() != static_cast<std::size_t>(num_classes) || head.dim() != static_cast<std::size_t>(x.cols())) {
    throw Error(ErrorCode::kDimensionMismatch, "init", "initial head shape mismatch");
  }

  // Optional seeded downsampling.
  const Matrix* data = &x;
  std::span<const int> ys = labels;
  Matrix capped;
  std::vector<int> capped_labels;
  if (config.max_examples > 0 && static_cast<std::size_t>(x.rows()) > config.max_examples) {
    Rng rng(split_seed(config.seed, 0xCA9ULL));
    auto rows = sample_without_replacement(rng, static_cast<std::size_t>(x.rows()), config.max_examples);
    std::sort(rows.begin(), rows.end());
    capped = detail::gather_rows(x, rows);
    capped_labels = detail::gather_labels(labels, rows);
    data = &capped;
    ys = capped_labels;
  }

  Optimizer opt(config);
  detail::run_minibatch_epochs(
      static_cast<std::size_t>(data->rows()), config, log,
      [&](std::span<const std::size_t> rows, double lr) {
        const Matrix xb = detail::gather_rows(*data, rows);
        const auto yb = detail::gather_labels(ys, rows);
        const auto g = cross_entropy_gradient(head, xb, yb);
        const ParamBlock blocks[] = {
            {head.weights.data(), g.d_weights.data(), static_cast<std::size_t>(head.weights.size()), true},
            {head.bias.data(), g.d_bias.data(), static_cast<std::size_t>(head.bias.size()), false},
        };
        opt.step(blocks, lr);
      },
      [&] { return cross_entropy_loss(head, *data, ys); });
  return head;
}

LinearHead fit_linear_head(const FeatureSet& set, const TrainConfig& config, TrainLog* log) {
  set.validate();
  const std::vector<int> labels(set.labels.begin(), set.labels.end());
  return fit_linear_head(set.to_double(), labels, static_cast<int>(set.num_classes()), config, log);
}

LinearHead fit_logistic_regression(const Matrix& support, std::span<const int> labels, const TrainConfig& config,
                                   TrainLog* log) {
  if (labels.empty()) throw Error(ErrorCode::kEmptySelection, "support", "no support rows");
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  LinearHead init;
  init.weights = Matrix::Zero(k, support.cols());
  init.bias = Vector::Zero(k);
  return fit_linear_head(support, labels, k, config, log, &init);
}

std::vector<int> predict_labels(const LinearHead& head, const Matrix& x) {
  const Matrix z = head.logits(x);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index best = 0;
    z.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double silhouette_score(const Matrix& x, std::span<const int> labels) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (labels.size() != n) throw Error(ErrorCode::kDimensionMismatch, "labels", "label count differs from row count");
  std::map<int, std::size_t> dense;
  for (const int l : labels) dense.emplace(l, 0);
  if (dense.size() < 2) throw Error(ErrorCode::kInvalidArgument, "labels", "silhouette needs at least 2 classes");
  std::size_t next = 0;
  for (auto& [label, id] : dense) id = next++;
  std::vector<std::size_t> cls(n), sizes(dense.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    cls[i] = dense[labels[i]];
    ++sizes[cls[i]];
  }
  double total = 0.0;
  std::vector<double> sums(dense.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (sizes[cls[i]] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[cls[j]] += (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).norm();
    }
    const double a = sums[cls[i]] / static_cast<double>(sizes[cls[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sums.size(); ++c) {
      if (c != cls[i]) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

}  // namespace fewbase
