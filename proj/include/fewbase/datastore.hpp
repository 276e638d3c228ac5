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
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fewbase/common.hpp"

namespace fewbase {

enum class Split { kTrain, kValidation, kTest };

const char* split_name(Split split);
Split parse_split(const std::string& name);

/// Largest admissible class count.
inline constexpr std::size_t kMaxClasses = std::size_t{1} << 20;

/// Embeddings with integer labels. Immutable after construction by
/// convention; every loader and generator calls validate().
struct FeatureSet {
  MatrixF features;                  // n x d
  std::vector<std::int32_t> labels;  // n, each in [0, C)
  std::vector<std::string> class_names;
  Split split = Split::kTrain;

  std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t num_classes() const { return class_names.size(); }

  /// Throws Error naming the offending field when an invariant is broken.
  void validate() const;

  /// Rows of each class in ascending order.
  std::vector<std::vector<std::size_t>> indices_by_class() const;

  Matrix to_double() const { return features.cast<double>(); }
  Matrix gather(std::span<const std::size_t> rows) const;
};

/// An ordered set of base-class ids with their selection scores.
/// Scores are non-increasing in list order.
struct ClassSubset {
  std::string method;
  std::vector<int> ids;
  std::vector<double> scores;

  std::size_t size() const { return ids.size(); }
};

struct CentroidTable {
  Matrix centroids;  // C x d
  std::vector<std::size_t> counts;
};

struct StandardizationStats {
  Vector mean;
  Vector std;

  Matrix apply(const Matrix& x) const;
  Matrix invert(const Matrix& x) const;
};

inline constexpr double kStdFloor = 1e-6;

// FFS1 feature files: "FFSv1\n", u32le header length, JSON header,
// n*d f32le row-major, n i32le labels.
std::vector<std::uint8_t> encode_feature_set(const FeatureSet& set);
FeatureSet decode_feature_set(std::span<const std::uint8_t> bytes);

FeatureSet load_feature_set(const std::filesystem::path& path);
void save_feature_set(const FeatureSet& set, const std::filesystem::path& path);

CentroidTable class_centroids(const FeatureSet& set);

/// Mean and population std over rows whose label is in `class_ids`.
StandardizationStats fit_standardization(const FeatureSet& set, std::span<const int> class_ids);
StandardizationStats fit_standardization(const FeatureSet& set, const ClassSubset& subset);

void l2_normalize_rows(Matrix& x);

/// Split name -> feature file path. Relative paths resolve against the
/// manifest's directory.
struct DatasetManifest {
  std::map<std::string, std::filesystem::path> splits;

  const std::filesystem::path& at(const std::string& split) const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace fewbase
