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

#include <vector>

#include "fewbase/classifiers.hpp"
#include "fewbase/common.hpp"
#include "fewbase/datastore.hpp"

namespace fewbase {

inline constexpr int kDefaultSubsetSize = 50;

/// Top `m` entries of `scores` by descending value, ties to the lower index.
ClassSubset top_m(const Vector& scores, int m, std::string method);

/// Average activations: mean softmax of the base head over `examples`, then
/// the `m` highest classes.
ClassSubset select_aa(const Matrix& examples, const LinearHead& head, int m = kDefaultSubsetSize);

/// Mean softmax row of the head over the examples.
Vector average_activations(const Matrix& examples, const LinearHead& head);

enum class UotScale {
  kRelative,  // epsilon and tau are multiples of the median cost
  kAbsolute,
};

struct UotParams {
  double epsilon = 0.05;
  double tau = 1.0;
  int max_iters = 1000;
  double tolerance = 1e-6;
  UotScale scale = UotScale::kRelative;
};

struct UotResult {
  Matrix plan;
  Vector row_marginals;
  Vector col_marginals;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  /// Fixed-point residual after each iteration.
  std::vector<double> residual_history;
  double epsilon = 0.0;  // resolved absolute values
  double tau = 0.0;
};

/// Entropic unbalanced optimal transport with KL-relaxed marginals, solved
/// by log-domain Sinkhorn scaling:
///   f <- lambda * (eps log a - eps LSE_j((g_j - C_ij) / eps)),  lambda = tau / (tau + eps)
/// and symmetrically for g. The residual is the largest change of f or g
/// divided by eps.
UotResult unbalanced_sinkhorn(const Matrix& cost, const Vector& mass_rows, const Vector& mass_cols,
                              const UotParams& params = {});

/// Unit mass on every target and base class, cost = centroid distances; the
/// top `m` base classes by column marginal. Throws kNonConvergence when
/// max_iters is hit first.
ClassSubset select_uot(const Matrix& target_centroids, const Matrix& base_centroids, const UotParams& params = {},
                       int m = kDefaultSubsetSize);

Matrix pairwise_distances(const Matrix& a, const Matrix& b);

}  // namespace fewbase
