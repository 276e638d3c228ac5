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

#include "fewbase/io.hpp"

#include <cstdio>

#include "fewbase/datastore.hpp"

namespace fewbase {

namespace {

template <typename T>
T required(const Json& json, const char* key) {
  if (!json.is_object() || !json.contains(key)) throw Error(ErrorCode::kMalformedHeader, key, "missing key");
  try {
    return json.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kMalformedHeader, key, e.what());
  }
}

std::string encode_matrix(const Matrix& m) { return encode_f32le(m.data(), static_cast<std::size_t>(m.size())); }

Matrix decode_matrix(const std::string& text, Eigen::Index rows, Eigen::Index cols, const char* field) {
  const auto values = decode_f32le(text, static_cast<std::size_t>(rows * cols), field);
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

Vector decode_vector(const std::string& text, Eigen::Index n, const char* field) {
  const auto values = decode_f32le(text, static_cast<std::size_t>(n), field);
  return Eigen::Map<const Vector>(values.data(), n);
}

}  // namespace

Json load_json(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kMalformedHeader, path.string(), e.what());
  }
}

void save_json(const Json& json, const std::filesystem::path& path) { write_text_file(path, json.dump(2) + "\n"); }

Json head_to_json(const LinearHead& head) {
  return Json{{"d", head.dim()},
              {"C", head.num_classes()},
              {"weights", encode_matrix(head.weights)},
              {"bias", encode_f32le(head.bias.data(), static_cast<std::size_t>(head.bias.size()))}};
}

LinearHead head_from_json(const Json& json) {
  const auto d = required<Eigen::Index>(json, "d");
  const auto c = required<Eigen::Index>(json, "C");
  if (d < 0 || c < 0) throw Error(ErrorCode::kMalformedHeader, "d", "negative shape");
  LinearHead head;
  head.weights = decode_matrix(required<std::string>(json, "weights"), c, d, "weights");
  head.bias = decode_vector(required<std::string>(json, "bias"), c, "bias");
  return head;
}

Json adapter_to_json(const AdapterModel& adapter) {
  Json j{{"mode", adapter_mode_name(adapter.mode)},
         {"in", adapter.input_dim()},
         {"out", adapter.output_dim()},
         {"transform_rows", adapter.transform.rows()},
         {"transform", encode_matrix(adapter.transform)},
         {"bias", encode_f32le(adapter.bias.data(), static_cast<std::size_t>(adapter.bias.size()))},
         {"stats", nullptr}};
  if (adapter.stats) {
    const auto n = static_cast<std::size_t>(adapter.stats->mean.size());
    j["stats"] = Json{{"dim", n},
                      {"mean", encode_f32le(adapter.stats->mean.data(), n)},
                      {"std", encode_f32le(adapter.stats->std.data(), n)}};
  }
  return j;
}

AdapterModel adapter_from_json(const Json& json) {
  AdapterModel a;
  a.mode = parse_adapter_mode(required<std::string>(json, "mode"));
  const auto in = required<Eigen::Index>(json, "in");
  const auto rows = required<Eigen::Index>(json, "transform_rows");
  const auto cols = rows > 0 ? in : 0;
  a.transform = decode_matrix(required<std::string>(json, "transform"), rows, cols, "transform");
  a.bias = decode_vector(required<std::string>(json, "bias"), rows, "bias");
  const auto& stats = json.at("stats");
  if (!stats.is_null()) {
    const auto n = required<Eigen::Index>(stats, "dim");
    StandardizationStats s;
    s.mean = decode_vector(required<std::string>(stats, "mean"), n, "stats.mean");
    s.std = decode_vector(required<std::string>(stats, "std"), n, "stats.std");
    a.stats = std::move(s);
  }
  return a;
}

Json subset_to_json(const ClassSubset& subset) {
  return Json{{"method", subset.method}, {"ids", subset.ids}, {"scores", subset.scores}};
}

ClassSubset subset_from_json(const Json& json) {
  ClassSubset s;
  s.method = required<std::string>(json, "method");
  s.ids = required<std::vector<int>>(json, "ids");
  s.scores = required<std::vector<double>>(json, "scores");
  if (s.scores.size() != s.ids.size()) throw Error(ErrorCode::kDimensionMismatch, "scores", "ids and scores differ in length");
  return s;
}

Json partition_to_json(const ClassPartition& partition) {
  return Json{{"representation", representation_name(partition.representation)},
              {"clusters", partition.clusters},
              {"assignment", partition.assignment}};
}

ClassPartition partition_from_json(const Json& json) {
  ClassPartition p;
  p.representation = parse_representation(required<std::string>(json, "representation"));
  p.clusters = required<int>(json, "clusters");
  p.assignment = required<std::vector<int>>(json, "assignment");
  for (const int a : p.assignment) {
    if (a < 0 || a >= p.clusters) throw Error(ErrorCode::kMalformedHeader, "assignment", "cluster id out of range");
  }
  return p;
}

Json episodes_to_json(const std::vector<Episode>& episodes) {
  Json list = Json::array();
  for (const auto& ep : episodes) {
    list.push_back(Json{{"seed", ep.seed},
                        {"class_map", ep.class_map},
                        {"support", ep.support_indices},
                        {"query", ep.query_indices}});
  }
  return Json{{"episodes", list}};
}

std::vector<Episode> episodes_from_json(const Json& json, const FeatureSet& set) {
  const auto list = required<Json>(json, "episodes");
  if (!list.is_array()) throw Error(ErrorCode::kMalformedHeader, "episodes", "expected an array");
  std::vector<Episode> out;
  out.reserve(list.size());
  for (const auto& e : list) {
    out.push_back(materialize_episode(set, required<std::vector<std::size_t>>(e, "support"),
                                      required<std::vector<std::size_t>>(e, "query"),
                                      required<std::vector<int>>(e, "class_map"), required<std::uint64_t>(e, "seed")));
  }
  return out;
}

Json entry_to_json(const LibraryEntry& entry) {
  return Json{{"subset", subset_to_json(entry.subset)},
              {"adapter", adapter_to_json(entry.adapter)},
              {"head", head_to_json(entry.head)},
              {"cluster", entry.cluster},
              {"is_base", entry.is_base}};
}

LibraryEntry entry_from_json(const Json& json) {
  LibraryEntry e;
  e.subset = subset_from_json(required<Json>(json, "subset"));
  e.adapter = adapter_from_json(required<Json>(json, "adapter"));
  e.head = head_from_json(required<Json>(json, "head"));
  e.cluster = required<int>(json, "cluster");
  e.is_base = required<bool>(json, "is_base");
  return e;
}

void save_library(const ExtractorLibrary& library, const std::filesystem::path& manifest_path) {
  const auto dir = manifest_path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  const auto stem = manifest_path.stem().string();
  Json entries = Json::array();
  for (std::size_t i = 0; i < library.entries.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "_entry%03zu.json", i);
    const std::string file = stem + name;
    save_json(entry_to_json(library.entries[i]), dir / file);
    entries.push_back(Json{{"file", file}, {"cluster", library.entries[i].cluster}, {"is_base", library.entries[i].is_base}});
  }
  save_json(Json{{"entries", entries}}, manifest_path);
}

ExtractorLibrary load_library(const std::filesystem::path& manifest_path) {
  const auto manifest = load_json(manifest_path);
  const auto list = required<Json>(manifest, "entries");
  ExtractorLibrary lib;
  for (const auto& item : list) {
    std::filesystem::path file = required<std::string>(item, "file");
    if (file.is_relative()) file = manifest_path.parent_path() / file;
    lib.entries.push_back(entry_from_json(load_json(file)));
  }
  if (lib.entries.empty()) throw Error(ErrorCode::kConfig, "entries", "library manifest lists no entries");
  return lib;
}

namespace {

#define FEWBASE_UNIVERSE_FIELDS(X)                                                                              \
  X(dim) X(domains) X(classes_per_domain) X(examples_per_class) X(domain_rank) X(within_class_sigma)          \
  X(domain_separation) X(class_spread) X(aligned_domain) X(alignment) X(target_classes)                      \
  X(target_examples_per_class) X(pool_classes) X(pool_examples_per_class) X(semantic_dim) X(semantic_noise)   \
  X(seed)

}  // namespace

UniverseConfig universe_config_from_json(const Json& json) {
  if (!json.is_object()) throw Error(ErrorCode::kConfig, "config", "expected a JSON object");
  UniverseConfig c;
  for (const auto& item : json.items()) {
    bool known = false;
#define FEWBASE_READ(name)                                                   \
  if (item.key() == #name) {                                                 \
    known = true;                                                            \
    try {                                                                    \
      c.name = item.value().get<decltype(c.name)>();                         \
    } catch (const Json::exception& e) {                                     \
      throw Error(ErrorCode::kConfig, #name, e.what());                      \
    }                                                                        \
  }
    FEWBASE_UNIVERSE_FIELDS(FEWBASE_READ)
#undef FEWBASE_READ
    if (!known) throw Error(ErrorCode::kConfig, item.key(), "unknown universe config key");
  }
  c.validate();
  return c;
}

Json universe_config_to_json(const UniverseConfig& c) {
  Json j;
#define FEWBASE_WRITE(name) j[#name] = c.name;
  FEWBASE_UNIVERSE_FIELDS(FEWBASE_WRITE)
#undef FEWBASE_WRITE
  return j;
}

void save_universe(const Universe& universe, const UniverseConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_feature_set(universe.base, dir / "base.ffs");
  save_feature_set(universe.target, dir / "target.ffs");
  save_feature_set(universe.pool, dir / "pool.ffs");
  save_feature_set(universe.semantic, dir / "semantic.ffs");
  save_json(subset_to_json(universe.truth), dir / "truth.json");
  save_json(universe_config_to_json(config), dir / "universe.json");
  DatasetManifest manifest;
  manifest.splits["train"] = "base.ffs";
  manifest.splits["test"] = "target.ffs";
  manifest.splits["validation"] = "pool.ffs";
  save_manifest(manifest, dir / "manifest.json");
}

}  // namespace fewbase
