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

#include "fewbase/synthbench.hpp"

#include <cmath>
#include <set>

#include <Eigen/QR>

namespace fewbase {

void UniverseConfig::validate() const {
  auto positive = [](int v, const char* field) {
    if (v < 1) throw Error(ErrorCode::kConfig, field, "must be >= 1");
  };
  positive(dim, "dim");
  positive(domains, "domains");
  positive(classes_per_domain, "classes_per_domain");
  positive(examples_per_class, "examples_per_class");
  positive(domain_rank, "domain_rank");
  positive(target_classes, "target_classes");
  positive(target_examples_per_class, "target_examples_per_class");
  positive(pool_classes, "pool_classes");
  positive(pool_examples_per_class, "pool_examples_per_class");
  positive(semantic_dim, "semantic_dim");
  if ((domains + 1) * domain_rank > dim) {
    throw Error(ErrorCode::kConfig, "domain_rank", "(domains + 1) * domain_rank must not exceed dim");
  }
  if (!(domain_separation > 0.0)) throw Error(ErrorCode::kConfig, "domain_separation", "must be > 0");
  if (within_class_sigma < 0.0 || class_spread < 0.0 || semantic_noise < 0.0) {
    throw Error(ErrorCode::kConfig, "sigma", "scales must be >= 0");
  }
  if (aligned_domain < 0 || aligned_domain >= domains) throw Error(ErrorCode::kConfig, "aligned_domain", "out of range");
  if (alignment < 0.0 || alignment > 1.0) throw Error(ErrorCode::kConfig, "alignment", "must be in [0, 1]");
}

namespace {

Vector gaussian(Rng& rng, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

Vector unit(Rng& rng, Eigen::Index n) {
  Vector v = gaussian(rng, n);
  return v / v.norm();
}

void emit_class(FeatureSet& set, Eigen::Index& row, const Vector& mean, int examples, double sigma, int label,
                Rng& rng) {
  for (int e = 0; e < examples; ++e, ++row) {
    set.features.row(row) = (mean + sigma * gaussian(rng, mean.size())).cast<float>().transpose();
    set.labels[static_cast<std::size_t>(row)] = label;
  }
}

}  // namespace

Universe generate_universe(const UniverseConfig& config) {
  config.validate();
  const auto d = static_cast<Eigen::Index>(config.dim);
  const auto r = static_cast<Eigen::Index>(config.domain_rank);
  Rng rng(config.seed);

  Matrix gauss(d, d);
  for (Eigen::Index i = 0; i < gauss.size(); ++i) gauss.data()[i] = rng.normal();
  const Matrix basis = Eigen::HouseholderQR<Matrix>(gauss).householderQ();

  std::vector<Matrix> subspace;
  std::vector<Vector> domain_mean;
  for (int g = 0; g <= config.domains; ++g) {  // index `domains` is the unseen domain
    subspace.push_back(basis.middleCols(g * r, r));
    domain_mean.push_back(config.domain_separation * unit(rng, d));
  }

  Universe u;
  const int classes = config.domains * config.classes_per_domain;
  u.base.split = Split::kTrain;
  u.base.features.resize(static_cast<Eigen::Index>(classes) * config.examples_per_class, d);
  u.base.labels.resize(static_cast<std::size_t>(u.base.features.rows()));
  u.semantic.split = Split::kTrain;
  u.semantic.features.resize(classes, config.semantic_dim);
  u.semantic.labels.resize(static_cast<std::size_t>(classes));

  Eigen::Index row = 0;
  std::vector<Vector> prototypes;
  for (int g = 0; g < config.domains; ++g) prototypes.push_back(unit(rng, config.semantic_dim));
  for (int g = 0; g < config.domains; ++g) {
    for (int k = 0; k < config.classes_per_domain; ++k) {
      const int label = g * config.classes_per_domain + k;
      const Vector mean = domain_mean[static_cast<std::size_t>(g)] +
                          config.class_spread * subspace[static_cast<std::size_t>(g)] * gaussian(rng, r);
      emit_class(u.base, row, mean, config.examples_per_class, config.within_class_sigma, label, rng);
      u.base.class_names.push_back("d" + std::to_string(g) + "_c" + std::to_string(k));
      const Vector sem = prototypes[static_cast<std::size_t>(g)] + config.semantic_noise * gaussian(rng, config.semantic_dim);
      u.semantic.features.row(label) = sem.cast<float>().transpose();
      u.semantic.labels[static_cast<std::size_t>(label)] = label;
    }
  }
  u.semantic.class_names = u.base.class_names;

  const auto a = static_cast<std::size_t>(config.aligned_domain);
  const auto unseen = static_cast<std::size_t>(config.domains);
  const double w = config.alignment;
  const Vector center = w * domain_mean[a] + (1.0 - w) * domain_mean[unseen];
  auto make_target = [&](FeatureSet& set, Split split, int count, int examples, const std::string& prefix) {
    set.split = split;
    set.features.resize(static_cast<Eigen::Index>(count) * examples, d);
    set.labels.resize(static_cast<std::size_t>(set.features.rows()));
    Eigen::Index trow = 0;
    for (int k = 0; k < count; ++k) {
      const Vector offset = std::sqrt(w) * subspace[a] * gaussian(rng, r) +
                            std::sqrt(1.0 - w) * subspace[unseen] * gaussian(rng, r);
      emit_class(set, trow, center + config.class_spread * offset, examples, config.within_class_sigma, k, rng);
      set.class_names.push_back(prefix + std::to_string(k));
    }
    set.validate();
  };
  make_target(u.target, Split::kTest, config.target_classes, config.target_examples_per_class, "t");
  make_target(u.pool, Split::kValidation, config.pool_classes, config.pool_examples_per_class, "p");

  u.truth.method = "truth";
  for (int k = 0; k < config.classes_per_domain; ++k) {
    u.truth.ids.push_back(config.aligned_domain * config.classes_per_domain + k);
    u.truth.scores.push_back(1.0);
  }
  u.base.validate();
  u.semantic.validate();
  return u;
}

PrecisionRecall selection_precision_recall(const ClassSubset& selected, const ClassSubset& truth) {
  if (selected.ids.empty() || truth.ids.empty()) {
    throw Error(ErrorCode::kEmptySelection, "subset", "precision/recall need nonempty subsets");
  }
  const std::set<int> sel(selected.ids.begin(), selected.ids.end());
  const std::set<int> tru(truth.ids.begin(), truth.ids.end());
  std::size_t hits = 0;
  for (const int id : sel) hits += tru.count(id);
  return {static_cast<double>(hits) / static_cast<double>(sel.size()),
          static_cast<double>(hits) / static_cast<double>(tru.size())};
}

}  // namespace fewbase
