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

#include "fewbase/episodes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fewbase {

std::vector<std::size_t> Episode::shots_per_class() const {
  std::vector<std::size_t> shots(static_cast<std::size_t>(ways), 0);
  for (const int label : support_labels) ++shots[static_cast<std::size_t>(label)];
  return shots;
}

SamplerKind parse_sampler(const std::string& name) {
  if (name == "uniform") return SamplerKind::kUniform;
  if (name == "md") return SamplerKind::kMd;
  throw Error(ErrorCode::kConfig, "sampler", "unknown sampler '" + name + "' (expected uniform|md)");
}

const char* sampler_name(SamplerKind kind) { return kind == SamplerKind::kMd ? "md" : "uniform"; }

Episode materialize_episode(const FeatureSet& set, std::vector<std::size_t> support_indices,
                            std::vector<std::size_t> query_indices, std::vector<int> class_map,
                            std::uint64_t seed) {
  Episode ep;
  ep.ways = static_cast<int>(class_map.size());
  if (ep.ways < 2) throw Error(ErrorCode::kInvalidArgument, "class_map", "an episode needs at least 2 ways");
  std::vector<int> local(set.num_classes(), -1);
  for (std::size_t k = 0; k < class_map.size(); ++k) {
    const int c = class_map[k];
    if (c < 0 || static_cast<std::size_t>(c) >= set.num_classes()) {
      throw Error(ErrorCode::kLabelOutOfRange, "class_map", "class id " + std::to_string(c));
    }
    local[static_cast<std::size_t>(c)] = static_cast<int>(k);
  }
  auto to_local = [&](const std::vector<std::size_t>& rows, const char* field) {
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (const auto r : rows) {
      if (r >= set.rows()) throw Error(ErrorCode::kInvalidArgument, field, "row index out of range");
      const int l = local[static_cast<std::size_t>(set.labels[r])];
      if (l < 0) throw Error(ErrorCode::kInvalidArgument, field, "row label not in class_map");
      labels.push_back(l);
    }
    return labels;
  };
  ep.support_labels = to_local(support_indices, "support_indices");
  ep.query_labels = to_local(query_indices, "query_indices");
  ep.support_features = set.gather(support_indices);
  ep.query_features = set.gather(query_indices);
  ep.support_indices = std::move(support_indices);
  ep.query_indices = std::move(query_indices);
  ep.class_map = std::move(class_map);
  ep.seed = seed;
  for (const auto s : ep.shots_per_class()) {
    if (s == 0) throw Error(ErrorCode::kInsufficientExamples, "support_indices", "class without support");
  }
  return ep;
}

Episode sample_uniform_episode(const FeatureSet& set, int ways, int shots, int queries_per_class,
                               std::uint64_t seed) {
  if (ways < 2) throw Error(ErrorCode::kInvalidArgument, "ways", "need at least 2 ways");
  if (shots < 1) throw Error(ErrorCode::kInvalidArgument, "shots", "need at least 1 shot");
  if (queries_per_class < 1) throw Error(ErrorCode::kInvalidArgument, "queries", "need at least 1 query");
  if (static_cast<std::size_t>(ways) > set.num_classes()) {
    throw Error(ErrorCode::kInvalidArgument, "ways",
                std::to_string(ways) + " ways requested but only " + std::to_string(set.num_classes()) +
                    " classes");
  }
  const auto by_class = set.indices_by_class();
  const auto need = static_cast<std::size_t>(shots + queries_per_class);
  std::vector<std::size_t> eligible;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() >= need) eligible.push_back(c);
  }
  if (eligible.size() < static_cast<std::size_t>(ways)) {
    throw Error(ErrorCode::kInsufficientExamples, "ways",
                "only " + std::to_string(eligible.size()) + " classes have " + std::to_string(need) + " rows");
  }
  Rng rng(seed);
  const auto picks = sample_without_replacement(rng, eligible.size(), static_cast<std::size_t>(ways));
  std::vector<int> class_map;
  std::vector<std::size_t> support, query;
  for (const auto p : picks) {
    const auto c = eligible[p];
    class_map.push_back(static_cast<int>(c));
    const auto& rows = by_class[c];
    const auto chosen = sample_without_replacement(rng, rows.size(), need);
    for (std::size_t i = 0; i < need; ++i) {
      (i < static_cast<std::size_t>(shots) ? support : query).push_back(rows[chosen[i]]);
    }
  }
  return materialize_episode(set, std::move(support), std::move(query), std::move(class_map), seed);
}

Episode sample_md_episode(const FeatureSet& set, std::uint64_t seed, const MdSamplingConfig& caps) {
  if (set.num_classes() < 5) throw Error(ErrorCode::kInsufficientExamples, "classes", "need C >= 5");
  const auto by_class = set.indices_by_class();
  std::vector<std::size_t> eligible;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() >= 2) eligible.push_back(c);
  }
  if (eligible.size() < 2) {
    throw Error(ErrorCode::kInsufficientExamples, "classes", "no two classes with >= 2 examples");
  }
  Rng rng(seed);
  const auto hi = std::min<std::size_t>(static_cast<std::size_t>(caps.max_ways), eligible.size());
  const auto lo = std::min<std::size_t>(static_cast<std::size_t>(caps.min_ways), hi);
  const auto ways = lo + rng.below(hi - lo + 1);
  const auto picks = sample_without_replacement(rng, eligible.size(), ways);

  // Queries first so that every class keeps at least one support row.
  std::vector<std::size_t> queries(ways), shots(ways);
  std::vector<std::vector<std::size_t>> order(ways);
  const double log_lo = std::log(static_cast<double>(caps.min_shots));
  const double log_hi = std::log(static_cast<double>(caps.max_shots));
  for (std::size_t k = 0; k < ways; ++k) {
    const auto& rows = by_class[eligible[picks[k]]];
    order[k] = sample_without_replacement(rng, rows.size(), rows.size());
    queries[k] = std::min<std::size_t>(static_cast<std::size_t>(caps.queries_per_class), rows.size() - 1);
    const auto draw = static_cast<std::size_t>(std::floor(std::exp(rng.uniform(log_lo, log_hi)) + 0.5));
    shots[k] = std::clamp<std::size_t>(draw, 1, rows.size() - queries[k]);
  }
  const auto budget = static_cast<std::size_t>(caps.support_budget);
  auto total = std::accumulate(shots.begin(), shots.end(), std::size_t{0});
  if (total > budget) {
    for (auto& s : shots) s = std::max<std::size_t>(1, s * budget / total);
    total = std::accumulate(shots.begin(), shots.end(), std::size_t{0});
    while (total > budget) {
      auto it = std::max_element(shots.begin(), shots.end());
      if (*it <= 1) break;
      --*it;
      --total;
    }
  }

  std::vector<int> class_map;
  std::vector<std::size_t> support, query;
  for (std::size_t k = 0; k < ways; ++k) {
    const auto c = eligible[picks[k]];
    class_map.push_back(static_cast<int>(c));
    const auto& rows = by_class[c];
    for (std::size_t i = 0; i < queries[k]; ++i) query.push_back(rows[order[k][i]]);
    for (std::size_t i = 0; i < shots[k]; ++i) support.push_back(rows[order[k][queries[k] + i]]);
  }
  return materialize_episode(set, std::move(support), std::move(query), std::move(class_map), seed);
}

std::vector<Episode> episode_stream(const FeatureSet& set, std::uint64_t master_seed, int count,
                                    const SamplerConfig& sampler) {
  if (count < 1) throw Error(ErrorCode::kInvalidArgument, "count", "need at least one episode");
  std::vector<Episode> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const auto seed = split_seed(master_seed, static_cast<std::uint64_t>(i));
    if (sampler.kind == SamplerKind::kMd) {
      out.push_back(sample_md_episode(set, seed, sampler.md));
    } else {
      out.push_back(sample_uniform_episode(set, sampler.ways, sampler.shots, sampler.queries_per_class, seed));
    }
  }
  return out;
}

}  // namespace fewbase
