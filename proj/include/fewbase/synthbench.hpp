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
#include <utility>

#include "fewbase/datastore.hpp"

namespace fewbase {

/// Synthetic embedding universe with known relevant base classes.
///
/// Recipe: draw a random orthonormal basis of R^d. Latent domain g owns
/// `domain_rank` basis columns U_g and a mean m_g = separation * u_g (u_g a
/// random unit vector). Base class means are m_g + spread * U_g z with
/// z ~ N(0, I); rows add N(0, sigma^2 I). One extra "unseen" domain owns its
/// own columns U_* and mean m_*. Target and pool classes are drawn around
///   center = w m_a + (1 - w) m_*,  offset = spread (sqrt(w) U_a z + sqrt(1 - w) U_* z')
/// where a is the aligned domain and w the alignment weight. The relevant
/// base classes are those of domain a.
struct UniverseConfig {
  int dim = 32;
  int domains = 8;
  int classes_per_domain = 8;
  int examples_per_class = 200;
  int domain_rank = 3;
  double within_class_sigma = 1.0;
  double domain_separation = 6.0;
  double class_spread = 1.5;
  int aligned_domain = 0;
  double alignment = 1.0;
  int target_classes = 20;
  int target_examples_per_class = 60;
  int pool_classes = 20;
  int pool_examples_per_class = 60;
  int semantic_dim = 16;
  double semantic_noise = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Universe {
  FeatureSet base;      // split train
  FeatureSet target;    // split test: episodes are sampled here
  FeatureSet pool;      // split validation: unlabeled domain examples
  FeatureSet semantic;  // one row per base class
  ClassSubset truth;
};

Universe generate_universe(const UniverseConfig& config);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

PrecisionRecall selection_precision_recall(const ClassSubset& selected, const ClassSubset& truth);

}  // namespace fewbase
