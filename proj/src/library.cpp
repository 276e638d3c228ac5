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

#include "fewbase/library.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fewbase/parallel.hpp"

namespace fewbase {

Representation parse_representation(const std::string& name) {
  if (name == "V" || name == "v") return Representation::kV;
  if (name == "Se" || name == "se" || name == "S") return Representation::kSe;
  if (name == "X" || name == "x") return Representation::kX;
  if (name == "R" || name == "r") return Representation::kR;
  throw Error(ErrorCode::kConfig, "mode", "unknown representation '" + name + "' (expected V|Se|X|R)");
}

const char* representation_name(Representation rep) {
  switch (rep) {
    case Representation::kV: return "V";
    case Representation::kSe: return "Se";
    case Representation::kX: return "X";
    case Representation::kR: return "R";
  }
  return "V";
}

std::vector<std::vector<int>> ClassPartition::members() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(clusters));
  for (std::size_t c = 0; c < assignment.size(); ++c) {
    out[static_cast<std::size_t>(assignment[c])].push_back(static_cast<int>(c));
  }
  return out;
}

namespace {

Matrix normalize_and_center(Matrix block) {
  l2_normalize_rows(block);
  block.rowwise() -= block.colwise().mean();
  return block;
}

}  // namespace

std::optional<Matrix> build_class_representation(Representation mode, const CentroidTable& centroids,
                                                 const Matrix* semantic) {
  if ((mode == Representation::kSe || mode == Representation::kX) && semantic == nullptr) {
    throw Error(ErrorCode::kConfig, "semantic", "Se and X representations need semantic vectors");
  }
  if (semantic != nullptr && (mode == Representation::kSe || mode == Representation::kX) &&
      semantic->rows() != centroids.centroids.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "semantic", "need one semantic row per base class");
  }
  switch (mode) {
    case Representation::kV:
      return centroids.centroids;
    case Representation::kSe:
      return *semantic;
    case Representation::kX: {
      const Matrix v = normalize_and_center(centroids.centroids);
      const Matrix s = normalize_and_center(*semantic);
      Matrix out(v.rows(), v.cols() + s.cols());
      out << v, s;
      return out;
    }
    case Representation::kR:
      return std::nullopt;
  }
  return std::nullopt;
}

WardResult ward_cluster(const Matrix& representation, int clusters) {
  const auto n = static_cast<int>(representation.rows());
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "representation", "no classes");
  if (clusters < 1 || clusters > n) {
    throw Error(ErrorCode::kInvalidArgument, "L", "need 1 <= L <= C (C = " + std::to_string(n) + ")");
  }
  // Slot-indexed state; node[s] is the dendrogram id currently in slot s.
  Matrix dist(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) dist(i, j) = (representation.row(i) - representation.row(j)).squaredNorm();
  }
  std::vector<int> node(static_cast<std::size_t>(n)), size(static_cast<std::size_t>(n), 1);
  std::iota(node.begin(), node.end(), 0);
  std::vector<bool> active(static_cast<std::size_t>(n), true);

  WardResult result;
  result.dendrogram.leaves = n;
  for (int step = 0; step < n - 1; ++step) {
    int bi = -1, bj = -1;
    double best = 0.0;
    std::pair<int, int> best_key{0, 0};
    for (int i = 0; i < n; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      for (int j = i + 1; j < n; ++j) {
        if (!active[static_cast<std::size_t>(j)]) continue;
        const double d = dist(i, j);
        const auto a = node[static_cast<std::size_t>(i)], b = node[static_cast<std::size_t>(j)];
        const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
        if (bi < 0 || d < best || (d == best && key < best_key)) {
          bi = i;
          bj = j;
          best = d;
          best_key = key;
        }
      }
    }
    const double ni = size[static_cast<std::size_t>(bi)], nj = size[static_cast<std::size_t>(bj)];
    for (int k = 0; k < n; ++k) {
      if (!active[static_cast<std::size_t>(k)] || k == bi || k == bj) continue;
      const double nk = size[static_cast<std::size_t>(k)];
      const double updated = ((ni + nk) * dist(k, bi) + (nj + nk) * dist(k, bj) - nk * best) / (ni + nj + nk);
      dist(k, bi) = dist(bi, k) = updated;
    }
    result.dendrogram.merges.push_back(
        {best_key.first, best_key.second, std::sqrt(std::max(0.0, best)), static_cast<int>(ni + nj)});
    node[static_cast<std::size_t>(bi)] = n + step;
    size[static_cast<std::size_t>(bi)] = static_cast<int>(ni + nj);
    active[static_cast<std::size_t>(bj)] = false;
  }
  result.partition = cut_dendrogram(result.dendrogram, clusters);
  return result;
}

ClassPartition cut_dendrogram(const Dendrogram& dendrogram, int clusters) {
  const int n = dendrogram.leaves;
  if (clusters < 1 || clusters > n) throw Error(ErrorCode::kInvalidArgument, "L", "need 1 <= L <= C");
  // Union-find over leaves and internal nodes.
  std::vector<int> parent(static_cast<std::size_t>(2 * n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (int t = 0; t < n - clusters; ++t) {
    const auto& m = dendrogram.merges[static_cast<std::size_t>(t)];
    parent[static_cast<std::size_t>(find(m.left))] = n + t;
    parent[static_cast<std::size_t>(find(m.right))] = n + t;
  }
  ClassPartition p;
  p.clusters = clusters;
  p.assignment.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> label_of_root(static_cast<std::size_t>(2 * n), -1);
  int next = 0;
  for (int c = 0; c < n; ++c) {
    const int root = find(c);
    if (label_of_root[static_cast<std::size_t>(root)] < 0) label_of_root[static_cast<std::size_t>(root)] = next++;
    p.assignment[static_cast<std::size_t>(c)] = label_of_root[static_cast<std::size_t>(root)];
  }
  return p;
}

ClassPartition random_partition(int classes, int clusters, std::uint64_t seed) {
  if (clusters < 1 || clusters > classes) throw Error(ErrorCode::kInvalidArgument, "L", "need 1 <= L <= C");
  ClassPartition p;
  p.clusters = clusters;
  p.representation = Representation::kR;
  p.assignment.assign(static_cast<std::size_t>(classes), 0);
  Rng rng(seed);
  constexpr int kMaxAttempts = 1000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<int> counts(static_cast<std::size_t>(clusters), 0);
    for (auto& a : p.assignment) {
      a = static_cast<int>(rng.below(static_cast<std::size_t>(clusters)));
      ++counts[static_cast<std::size_t>(a)];
    }
    if (std::find(counts.begin(), counts.end(), 0) == counts.end()) return p;
  }
  // Rejection is hopeless when L is close to C: seed every cluster with one
  // distinct class, then assign the rest uniformly.
  const auto seeds = sample_without_replacement(rng, static_cast<std::size_t>(classes), static_cast<std::size_t>(clusters));
  std::vector<bool> fixed(static_cast<std::size_t>(classes), false);
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    p.assignment[seeds[k]] = static_cast<int>(k);
    fixed[seeds[k]] = true;
  }
  for (std::size_t c = 0; c < p.assignment.size(); ++c) {
    if (!fixed[c]) p.assignment[c] = static_cast<int>(rng.below(static_cast<std::size_t>(clusters)));
  }
  return p;
}

std::string dendrogram_csv(const Dendrogram& dendrogram) {
  std::ostringstream out;
  out.precision(17);
  out << "step,left,right,distance,size\n";
  for (std::size_t t = 0; t < dendrogram.merges.size(); ++t) {
    const auto& m = dendrogram.merges[t];
    out << t << ',' << m.left << ',' << m.right << ',' << m.distance << ',' << m.size << '\n';
  }
  return out.str();
}

std::size_t ExtractorLibrary::base_index() const {
  std::size_t found = entries.size();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].is_base) {
      if (found != entries.size()) throw Error(ErrorCode::kConfig, "library", "more than one base entry");
      found = i;
    }
  }
  if (found == entries.size()) throw Error(ErrorCode::kConfig, "library", "no base entry");
  return found;
}

LibraryEntry make_base_entry(const FeatureSet& base, const LinearHead* base_head) {
  LibraryEntry entry;
  entry.is_base = true;
  entry.subset.method = "base";
  for (std::size_t c = 0; c < base.num_classes(); ++c) {
    entry.subset.ids.push_back(static_cast<int>(c));
    entry.subset.scores.push_back(1.0);
  }
  entry.adapter = make_adapter(AdapterMode::kIdentity, base.dim(), 0);
  if (base_head != nullptr) {
    entry.head = *base_head;
  } else {
    entry.head.weights = Matrix::Zero(0, static_cast<Eigen::Index>(base.dim()));
    entry.head.bias = Vector::Zero(0);
  }
  return entry;
}

ExtractorLibrary build_library(const FeatureSet& base, const ClassPartition& partition, AdapterMode mode,
                               const FinetuneConfig& config, int jobs, const LinearHead* base_head) {
  if (partition.assignment.size() != base.num_classes()) {
    throw Error(ErrorCode::kDimensionMismatch, "partition", "partition must cover every base class");
  }
  const auto members = partition.members();
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (members[k].empty()) throw Error(ErrorCode::kInvalidArgument, "partition", "cluster " + std::to_string(k) + " is empty");
  }
  ExtractorLibrary lib;
  lib.entries.resize(members.size());
  parallel_for(members.size(), jobs, [&](std::size_t k) {
    LibraryEntry entry;
    entry.cluster = static_cast<int>(k);
    entry.subset.method = std::string("cluster_") + representation_name(partition.representation);
    entry.subset.ids = members[k];
    entry.subset.scores.assign(members[k].size(), 1.0);
    FinetuneConfig c = config;
    c.seed = split_seed(config.seed, k);
    try {
      auto tuned = finetune_two_step(base, entry.subset, mode, c);
      entry.adapter = std::move(tuned.adapter);
      entry.head = std::move(tuned.head);
    } catch (const Error& e) {
      throw Error(e.code(), "entry " + std::to_string(k), e.what());
    }
    lib.entries[k] = std::move(entry);
  });
  lib.entries.push_back(make_base_entry(base, base_head));
  return lib;
}

}  // namespace fewbase
