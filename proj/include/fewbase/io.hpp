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

// JSON forms of the model and selection artifacts. Matrices travel as
// base64 of row-major little-endian f32.

#pragma once

#include <filesystem>
#include <vector>

#include "json.hpp"

#include "fewbase/adapters.hpp"
#include "fewbase/classifiers.hpp"
#include "fewbase/episodes.hpp"
#include "fewbase/library.hpp"
#include "fewbase/synthbench.hpp"

namespace fewbase {

using Json = nlohmann::json;

Json load_json(const std::filesystem::path& path);
void save_json(const Json& json, const std::filesystem::path& path);

/// {"d", "C", "weights", "bias"}
Json head_to_json(const LinearHead& head);
LinearHead head_from_json(const Json& json);

/// {"mode", "in", "out", "transform", "bias", "stats": {"mean", "std"} | null}
Json adapter_to_json(const AdapterModel& adapter);
AdapterModel adapter_from_json(const Json& json);

/// {"method", "ids", "scores"}
Json subset_to_json(const ClassSubset& subset);
ClassSubset subset_from_json(const Json& json);

/// {"representation", "clusters", "assignment"}
Json partition_to_json(const ClassPartition& partition);
ClassPartition partition_from_json(const Json& json);

/// Episodes keep only row indices and the class map; features are re-read
/// from the feature set on load.
Json episodes_to_json(const std::vector<Episode>& episodes);
std::vector<Episode> episodes_from_json(const Json& json, const FeatureSet& set);

/// Writes one JSON file per entry next to the manifest and a manifest
/// {"entries": [{"file", "cluster", "is_base"}]}.
void save_library(const ExtractorLibrary& library, const std::filesystem::path& manifest_path);
ExtractorLibrary load_library(const std::filesystem::path& manifest_path);

/// {"subset", "adapter", "head", "cluster", "is_base"}
Json entry_to_json(const LibraryEntry& entry);
LibraryEntry entry_from_json(const Json& json);

/// Keys absent from `json` keep their defaults.
UniverseConfig universe_config_from_json(const Json& json);
Json universe_config_to_json(const UniverseConfig& config);

/// Writes base.ffs, target.ffs, pool.ffs, semantic.ffs, truth.json, the
/// generating config and a dataset manifest (train/test/validation) into
/// `dir`.
void save_universe(const Universe& universe, const UniverseConfig& config, const std::filesystem::path& dir);

}  // namespace fewbase
