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
#include <string>
#include <vector>

#include "fewbase/common.hpp"
#include "fewbase/datastore.hpp"

namespace fewbase {

/// One few-shot task. Labels are episode-local in [0, ways); class_map[k]
/// is the class id in the source set. The index vectors point into the
/// source set and are disjoint.
struct Episode {
  Matrix support_features;
  std::vector<int> support_labels;
  Matrix query_features;
  std::vector<int> query_labels;
  int ways = 0;
  std::vector<int> class_map;

  std::vector<std::size_t> support_indices;
  std::vector<std::size_t> query_indices;
  std::uint64_t seed = 0;

  /// Support shots per episode-local class.
  std::vector<std::size_t> shots_per_class() const;
};

/// Simplified Meta-Dataset-style sampler limits.
struct MdSamplingConfig {
  int min_ways = 5;
  int max_ways = 50;
  int min_shots = 1;
  int max_shots = 20;
  int support_budget = 100;
  int queries_per_class = 10;
};

enum class SamplerKind { kUniform, kMd };

struct SamplerConfig {
  SamplerKind kind = SamplerKind::kUniform;
  int ways = 5;
  int shots = 5;
  int queries_per_class = 15;
  MdSamplingConfig md;
};

SamplerKind parse_sampler(const std::string& name);
const char* sampler_name(SamplerKind kind);

Episode sample_uniform_episode(const FeatureSet& set, int ways, int shots, int queries_per_class,
                               std::uint64_t seed);

Episode sample_md_episode(const FeatureSet& set, std::uint64_t seed, const MdSamplingConfig& caps = {});

/// Episode i is sampled with split_seed(master_seed, i).
std::vector<Episode> episode_stream(const FeatureSet& set, std::uint64_t master_seed, int count,
                                    const SamplerConfig& sampler);

/// Rebuilds feature matrices from the stored indices.
Episode materialize_episode(const FeatureSet& set, std::vector<std::size_t> support_indices,
                            std::vector<std::size_t> query_indices, std::vector<int> class_map,
                            std::uint64_t seed = 0);

}  // namespace fewbase
