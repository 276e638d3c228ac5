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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fewbase/common.hpp"
#include "fewbase/datastore.hpp"

namespace fewbase {

// ---------------------------------------------------------------------------
// Nearest class mean

struct NcmModel {
  Matrix centroids;  // K x d
  std::vector<int> class_map;
};

/// Labels must cover [0, K) with at least one row each. K defaults to
/// max(label) + 1.
NcmModel fit_ncm(const Matrix& features, std::span<const int> labels, int num_classes = -1);

struct NcmPrediction {
  std::vector<int> labels;
  Matrix distances;  // rows x K, Euclidean
};

/// argmin_k ||x - c_k||, ties resolved to the lowest k.
NcmPrediction predict_ncm(const NcmModel& model, const Matrix& x);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Fits NCM on the support rows and returns query accuracy.
/// Episode-level feature preprocessing ahead of NCM. Centering subtracts the
/// support mean from both sides; l2 normalization follows centering.
struct NcmOptions {
  bool center = false;
  bool l2_normalize = false;
};

void preprocess_for_ncm(Matrix& support, Matrix& query, const NcmOptions& options);

double ncm_accuracy(const Matrix& support, std::span<const int> support_labels, const Matrix& query,
                    std::span<const int> query_labels, const NcmOptions& options = {});

// ---------------------------------------------------------------------------
// Linear softmax heads

/// Affine classifier: logits = x W^T + b.
struct LinearHead {
  Matrix weights;  // C x d
  Vector bias;     // C

  std::size_t num_classes() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(weights.cols()); }
  Matrix logits(const Matrix& x) const;
};

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

Matrix predict_softmax(const LinearHead& head, const Matrix& x);

enum class OptimizerKind { kAdam, kSgd };

OptimizerKind parse_optimizer(const std::string& name);
const char* optimizer_name(OptimizerKind kind);

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double momentum = 0.9;   // SGD only
  bool nesterov = true;    // SGD only
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 10;
  int batch_size = 128;    // >= rows means full batch
  std::size_t max_examples = 0;  // 0: no cap
  double weight_decay = 0.0;     // L2 on weight matrices, not biases
  std::uint64_t seed = 0;

  /// Head-only training: Adam, lr 1e-3, cosine, 10 epochs.
  static TrainConfig step1();
  /// Joint training: SGD with Nesterov momentum 0.9, lr 1e-3, cosine, 20 epochs.
  static TrainConfig step2();
  /// Episode-level logistic regression on a handful of rows.
  static TrainConfig logistic_regression();
};

/// Cosine decay from `base` to zero over `total_steps`.
double cosine_learning_rate(double base, std::size_t step, std::size_t total_steps);

struct TrainLog {
  std::vector<double> epoch_loss;  // [0] before training, then after each epoch
  std::size_t rows_used = 0;
  std::size_t steps = 0;
};

/// Uniform(-1/sqrt(d), 1/sqrt(d)) weights, zero bias.
LinearHead init_head(std::size_t classes, std::size_t dim, std::uint64_t seed);

LinearHead fit_linear_head(const FeatureSet& set, const TrainConfig& config, TrainLog* log = nullptr);

/// Trains from `init` (or a seeded init_head when null).
LinearHead fit_linear_head(const Matrix& x, std::span<const int> labels, int num_classes,
                           const TrainConfig& config, TrainLog* log = nullptr,
                           const LinearHead* init = nullptr);

/// Zero-initialized softmax regression on episode-local labels.
LinearHead fit_logistic_regression(const Matrix& support, std::span<const int> labels,
                                   const TrainConfig& config = TrainConfig::logistic_regression(),
                                   TrainLog* log = nullptr);

std::vector<int> predict_labels(const LinearHead& head, const Matrix& x);

struct CrossEntropyGradient {
  double loss = 0.0;
  Matrix d_weights;
  Vector d_bias;
  Matrix d_inputs;
};

/// Mean softmax cross-entropy over rows and its gradient.
CrossEntropyGradient cross_entropy_gradient(const LinearHead& head, const Matrix& x,
                                            std::span<const int> labels);

double cross_entropy_loss(const LinearHead& head, const Matrix& x, std::span<const int> labels);

// ---------------------------------------------------------------------------
// Optimizer over flat parameter blocks, shared with the adapters.

struct ParamBlock {
  double* value;
  const double* grad;
  std::size_t size;
  bool decay;  // apply weight decay
};

class Optimizer {
 public:
  explicit Optimizer(const TrainConfig& config) : config_(config) {}

  void step(std::span<const ParamBlock> blocks, double learning_rate);

 private:
  TrainConfig config_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
};

// ---------------------------------------------------------------------------

/// Mean silhouette with Euclidean distances. Singleton classes contribute 0.
double silhouette_score(const Matrix& x, std::span<const int> labels);

}  // namespace fewbase
