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
#include <vector>

#include "fewbase/adapters.hpp"
#include "fewbase/classifiers.hpp"
#include "fewbase/datastore.hpp"

namespace fewbase {

inline constexpr int kDefaultClusterCount = 11;

/// How base classes are described before clustering: visual centroids (V),
/// semantic name embeddings (Se), both concatenated (X), or none (R, random
/// partition).
enum class Representation { kV, kSe, kX, kR };

Representation parse_representation(const std::string& name);
const char* representation_name(Representation rep);

struct ClassPartition {
  std::vector<int> assignment;  // class -> cluster in [0, clusters)
  int clusters = 0;
  Representation representation = Representation::kV;

  /// Member class ids per cluster, ascending.
  std::vector<std::vector<int>> members() const;
};

/// One agglomeration step. Leaves are 0..n-1 and the node created by merge
/// t gets id n + t (SciPy linkage convention).
struct Merge {
  int left;   // smaller node id
  int right;  // larger node id
  double distance;
  int size;
};

struct Dendrogram {
  int leaves = 0;
  std::vector<Merge> merges;
};

/// Rows describing each base class. Returns nullopt for R.
/// X: each block is l2-normalized per row, then column-centered, then the
/// blocks are concatenated.
std::optional<Matrix> build_class_representation(Representation mode, const CentroidTable& centroids,
                                                 const Matrix* semantic);

struct WardResult {
  Dendrogram dendrogram;
  ClassPartition partition;
};

/// Ward agglomeration with Lance-Williams updates on squared Euclidean
/// distances. Reported linkage is sqrt(2 * n_a n_b / (n_a + n_b)) *
/// ||mu_a - mu_b||. Ties go to the lexicographically smallest node pair.
WardResult ward_cluster(const Matrix& representation, int clusters = kDefaultClusterCount);

/// Partition after applying the first leaves - clusters merges. Clusters
/// are numbered by their smallest member.
ClassPartition cut_dendrogram(const Dendrogram& dendrogram, int clusters);

ClassPartition random_partition(int classes, int clusters, std::uint64_t seed);

std::string dendrogram_csv(const Dendrogram& dendrogram);

struct LibraryEntry {
  ClassSubset subset;
  AdapterModel adapter;
  LinearHead head;
  int cluster = -1;  // -1 for the base entry
  bool is_base = false;
};

struct ExtractorLibrary {
  std::vector<LibraryEntry> entries;

  std::size_t base_index() const;
};

/// The identity entry over all classes.
LibraryEntry make_base_entry(const FeatureSet& base, const LinearHead* base_head);

/// One finetune_two_step per cluster (seed split by cluster index), then the
/// base entry last.
ExtractorLibrary build_library(const FeatureSet& base, const ClassPartition& partition, AdapterMode mode,
                               const FinetuneConfig& config, int jobs = 1, const LinearHead* base_head = nullptr);

}  // namespace fewbase
