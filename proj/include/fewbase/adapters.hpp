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
#include <optional>
#include <string>

#include "fewbase/classifiers.hpp"
#include "fewbase/common.hpp"
#include "fewbase/datastore.hpp"
#include "fewbase/episodes.hpp"

namespace fewbase {

/// Linear layer placed between frozen embeddings and the classification head.
enum class AdapterMode {
  kIdentity,
  kSquare,          // y = x A^T + b, A is d x d, fan-in uniform init
  kSquareResidual,  // y = x + x A^T + b, A and b start at zero
  kProjection,      // y = x A^T + b, A is M x d
  kStatsOnly,       // y = (x - mean) / std
};

AdapterMode parse_adapter_mode(const std::string& name);
std::string adapter_mode_name(AdapterMode mode);

struct AdapterModel {
  AdapterMode mode = AdapterMode::kIdentity;
  Matrix transform;  // out x d; empty for identity and stats_only
  Vector bias;
  /// Standardization applied before the linear layer (always present for
  /// stats_only, optional otherwise).
  std::optional<StandardizationStats> stats;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
};

AdapterModel make_adapter(AdapterMode mode, std::size_t dim, std::uint64_t seed, std::size_t projection_dim = 0);

Matrix apply_adapter(const AdapterModel& adapter, const Matrix& x);

struct FinetuneConfig {
  TrainConfig step1 = TrainConfig::step1();
  TrainConfig step2 = TrainConfig::step2();
  std::size_t subset_cap = 10000;
  std::size_t projection_dim = 0;  // projection mode output width; 0 means d / 2
  /// Fit subset standardization and apply it ahead of the linear layer.
  bool standardize = false;
  std::uint64_t seed = 0;

  /// Support-set fine-tuning: step 1 gets more full-batch epochs since the
  /// support holds only a handful of rows.
  static FinetuneConfig support_defaults();
};

struct FinetuneResult {
  AdapterModel adapter;
  LinearHead head;
  TrainLog step1_log;
  TrainLog step2_log;
  std::size_t rows_used = 0;
};

/// Step 1 trains the head over the subset classes with the adapter frozen
/// at its initialization; step 2 trains adapter and head jointly.
FinetuneResult finetune_two_step(const FeatureSet& base, const ClassSubset& subset, AdapterMode mode,
                                 const FinetuneConfig& config);

/// Same two-step contract on the support set with episode-local labels.
/// `frozen` runs step 1 only.
FinetuneResult finetune_on_support(const Episode& episode, AdapterMode mode, const FinetuneConfig& config,
                                   bool frozen = false);

/// Two-step training on arbitrary labelled rows (labels in [0, classes)).
FinetuneResult finetune_rows(const Matrix& x, std::span<const int> labels, int classes, AdapterMode mode,
                             const FinetuneConfig& config, std::optional<StandardizationStats> stats);

}  // namespace fewbase
